/**
 * DOM layer: renders the key grid, candidate strip, preview, committed
 * text and live stats, and forwards events to a TypingSession. All
 * typing logic lives on the service side; this file only draws state.
 */

import { ApiClient } from "./api.js";
import type { Layout } from "./api.js";
import { TypingSession } from "./core.js";

type Elements = {
  banner: HTMLElement;
  mode: HTMLSelectElement;
  grid: HTMLElement;
  strip: HTMLElement;
  preview: HTMLElement;
  committed: HTMLElement;
  stats: HTMLElement;
};

const MODES: Array<{ id: string; label: string; native: boolean }> = [
  { id: "hi", label: "हिन्दी (ambiguous keypad)", native: true },
  { id: "hi-Latn", label: "Hinglish (romanized)", native: false },
];

export class DemoApp {
  private session: TypingSession | null = null;
  private els: Elements;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.els = this.scaffold();
    document.addEventListener("keydown", (ev) => this.onPhysicalKey(ev));
  }

  async boot(): Promise<void> {
    try {
      await this.api.health();
    } catch {
      this.els.banner.textContent =
        "service unreachable: start it with `ambitype serve`";
      this.els.banner.style.display = "block";
      return;
    }
    this.els.banner.style.display = "none";
    await this.switchMode(this.els.mode.value);
  }

  private async switchMode(language: string): Promise<void> {
    const conf = MODES.find((m) => m.id === language) ?? MODES[0]!;
    this.session = new TypingSession(this.api, conf.id);
    await this.session.start();
    if (conf.native) {
      const layout = await this.api.layout(conf.id);
      this.renderGrid(layout);
    } else {
      this.els.grid.innerHTML =
        "<p class='hint'>romanized mode: use your physical keyboard, " +
        "space commits, escape clears</p>";
    }
    this.refresh();
  }

  // ------------------------------------------------------------- events

  private async onPhysicalKey(ev: KeyboardEvent): Promise<void> {
    if (!this.session || this.session.language !== "hi-Latn") return;
    if (ev.key === " ") {
      ev.preventDefault();
      await this.session.commitPreview();
    } else if (ev.key === "Backspace") {
      await this.session.tapBackspace();
    } else if (/^[a-zA-Z]$/.test(ev.key)) {
      await this.session.tapKey(ev.key);
    } else {
      return;
    }
    this.refresh();
  }

  private async onTap(representative: string): Promise<void> {
    if (!this.session) return;
    await this.session.tapKey(representative);
    this.refresh();
  }

  // ----------------------------------------------------------- rendering

  private renderGrid(layout: Layout): void {
    this.els.grid.innerHTML = "";
    if (!layout.keys.length) {
      this.els.grid.textContent = "layout has no keys";
      return;
    }
    for (const key of layout.keys) {
      const btn = document.createElement("button");
      btn.className = `key view-${key.view}`;
      btn.textContent = key.members.join(" ");
      btn.addEventListener("click", () => void this.onTap(key.representative));
      this.els.grid.appendChild(btn);
    }
    const back = document.createElement("button");
    back.className = "key control";
    back.textContent = "⌫";
    back.addEventListener("click", async () => {
      if (!this.session) return;
      await this.session.tapBackspace();
      this.refresh();
    });
    this.els.grid.appendChild(back);
    const space = document.createElement("button");
    space.className = "key control wide";
    space.textContent = "commit";
    space.addEventListener("click", async () => {
      if (!this.session) return;
      await this.session.commitPreview();
      this.refresh();
    });
    this.els.grid.appendChild(space);
  }

  private refresh(): void {
    const s = this.session;
    if (!s) return;
    this.els.preview.textContent = s.preview || s.composing || " ";
    this.els.committed.textContent = s.committed.join(" ");
    this.els.strip.innerHTML = "";
    for (const cand of s.candidates.slice(0, 3)) {
      const chip = document.createElement("button");
      chip.className = "chip";
      chip.textContent = cand.surface;
      chip.addEventListener("click", async () => {
        await s.selectCandidate(cand.surface);
        this.refresh();
      });
      this.els.strip.appendChild(chip);
    }
    const st = s.stats;
    this.els.stats.textContent =
      `keystrokes ${st.keystrokes} · selections ${st.selections} · ` +
      `live KSR ${st.liveKsr.toFixed(1)}%`;
  }

  private scaffold(): Elements {
    this.root.innerHTML = `
      <div class="banner" style="display:none"></div>
      <div class="bar">
        <select class="mode"></select>
        <span class="stats"></span>
      </div>
      <div class="preview"></div>
      <div class="strip"></div>
      <div class="grid"></div>
      <div class="committed"></div>`;
    const pick = <T extends HTMLElement>(sel: string) =>
      this.root.querySelector(sel) as T;
    const els: Elements = {
      banner: pick(".banner"),
      mode: pick<HTMLSelectElement>(".mode"),
      grid: pick(".grid"),
      strip: pick(".strip"),
      preview: pick(".preview"),
      committed: pick(".committed"),
      stats: pick(".stats"),
    };
    for (const m of MODES) {
      const opt = document.createElement("option");
      opt.value = m.id;
      opt.textContent = m.label;
      els.mode.appendChild(opt);
    }
    els.mode.addEventListener("change", () =>
      void this.switchMode(els.mode.value),
    );
    return els;
  }
}
