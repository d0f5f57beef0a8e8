// Triage shortcuts: s = suspicious, n = normal, applied to the card at
// the top of the queue. Disabled while typing into a form control.

export type TriageAction = (suspicious: boolean) => void;

function isTyping(target: EventTarget | null): boolean {
  if (!(target instanceof HTMLElement)) {
    return false;
  }
  const tag = target.tagName;
  return tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT" || target.isContentEditable;
}

export function bindTriageKeys(target: EventTarget, act: TriageAction): () => void {
  const onKeydown = (raw: Event) => {
    const ev = raw as KeyboardEvent;
    if (ev.ctrlKey || ev.metaKey || ev.altKey || isTyping(ev.target)) {
      return;
    }
    if (ev.key === "s") {
      ev.preventDefault();
      act(true);
    } else if (ev.key === "n") {
      ev.preventDefault();
      act(false);
    }
  };
  target.addEventListener("keydown", onKeydown);
  return () => target.removeEventListener("keydown", onKeydown);
}
