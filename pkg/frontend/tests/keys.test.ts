import { describe, expect, it, vi } from "vitest";

import { bindTriageKeys } from "../src/keys.js";

function press(key: string, init: KeyboardEventInit = {}, target: EventTarget = document) {
  const ev = new KeyboardEvent("keydown", { key, bubbles: true, cancelable: true, ...init });
  target.dispatchEvent(ev);
}

describe("triage keys", () => {
  it("maps s to suspicious and n to normal", () => {
    const act = vi.fn();
    const unbind = bindTriageKeys(document, act);
    press("s");
    press("n");
    expect(act.mock.calls).toEqual([[true], [false]]);
    unbind();
    press("s");
    expect(act).toHaveBeenCalledTimes(2);
  });

  it("ignores other keys and modifier chords", () => {
    const act = vi.fn();
    const unbind = bindTriageKeys(document, act);
    press("x");
    press("s", { ctrlKey: true });
    press("n", { metaKey: true });
    expect(act).not.toHaveBeenCalled();
    unbind();
  });

  it("stays quiet while typing into a form field", () => {
    const act = vi.fn();
    const unbind = bindTriageKeys(document, act);
    const input = document.createElement("input");
    document.body.appendChild(input);
    press("s", {}, input);
    expect(act).not.toHaveBeenCalled();
    input.remove();
    unbind();
  });
});
