/**
 * Session state for the demo: a pure driver over the service API.
 *
 * The UI layer renders whatever this holds and never computes
 * candidates itself, so a transcript collected here is comparable
 * byte-for-byte with direct API calls (that equivalence is the round-
 * trip test). Keystroke accounting mirrors the measurement harness
 * defaults: key taps, backspaces and the committing space each cost
 * one stroke, selecting a suggestion costs one stroke, and the
 * reference cost of a word is its character count plus a separator.
 */

import { ApiError } from "./api.js";
import type { Candidate, KeyResponse, TypingApi } from "./api.js";

export type TranscriptEntry =
  | { kind: "key"; key: string; response: KeyResponse }
  | { kind: "backspace"; response: KeyResponse }
  | { kind: "commit"; surface: string; context: string[] }
  | { kind: "predict"; candidates: Candidate[] };

export type Stats = {
  keystrokes: number;
  selections: number;
  referenceKeystrokes: number;
  liveKsr: number;
};

function ksr(reference: number, actual: number): number {
  if (reference <= 0) return 0;
  return ((reference - actual) / reference) * 100.0;
}

export class TypingSession {
  sessionId = "";
  composing = "";
  preview = "";
  candidates: Candidate[] = [];
  committed: string[] = [];
  transcript: TranscriptEntry[] = [];
  stats: Stats = {
    keystrokes: 0,
    selections: 0,
    referenceKeystrokes: 0,
    liveKsr: 0,
  };

  constructor(
    private api: TypingApi,
    readonly language: string,
    readonly mode?: string,
  ) {}

  async start(): Promise<void> {
    this.sessionId = await this.api.createSession(this.language, this.mode);
  }

  /** One tap on a layout key (or one physical letter in romanized mode). */
  async tapKey(key: string): Promise<KeyResponse> {
    const response = await this.recovering(() =>
      this.api.pressKey(this.sessionId, key),
    );
    this.stats.keystrokes += 1;
    this.applyCompose(response);
    this.transcript.push({ kind: "key", key, response });
    this.refreshKsr();
    return response;
  }

  async tapBackspace(): Promise<KeyResponse> {
    const response = await this.recovering(() =>
      this.api.backspace(this.sessionId),
    );
    this.stats.keystrokes += 1;
    this.applyCompose(response);
    this.transcript.push({ kind: "backspace", response });
    this.refreshKsr();
    return response;
  }

  /** Tap a candidate chip: commit that surface, costing one selection. */
  async selectCandidate(surface: string): Promise<void> {
    this.stats.selections += 1;
    await this.commitWord(surface);
  }

  /** Space bar: commit the live preview (or raw composing text). */
  async commitPreview(): Promise<void> {
    const surface = this.preview || this.composing;
    if (!surface) return;
    this.stats.keystrokes += 1;
    await this.commitWord(surface);
  }

  private async commitWord(surface: string): Promise<void> {
    const context = await this.recovering(() =>
      this.api.commit(this.sessionId, surface),
    );
    this.committed = context;
    this.composing = "";
    this.preview = "";
    this.stats.referenceKeystrokes += surface.length + 1;
    this.transcript.push({ kind: "commit", surface, context });
    this.refreshKsr();
    const predictions = await this.recovering(() =>
      this.api.predict(this.sessionId, 3),
    );
    this.candidates = predictions;
    this.transcript.push({ kind: "predict", candidates: predictions });
  }

  private applyCompose(response: KeyResponse): void {
    this.composing = response.composing;
    this.preview = response.preview;
    this.candidates = response.candidates;
  }

  private refreshKsr(): void {
    this.stats.liveKsr = ksr(
      this.stats.referenceKeystrokes,
      this.stats.keystrokes + this.stats.selections,
    );
  }

  /**
   * The service holds sessions in memory only; after a restart the id
   * dangles. Recreate it, replay the committed words to rebuild
   * context, and retry the one failed call.
   */
  private async recovering<T>(call: () => Promise<T>): Promise<T> {
    try {
      return await call();
    } catch (err) {
      if (!(err instanceof ApiError) || err.status !== 404) {
        throw err;
      }
      this.sessionId = await this.api.createSession(this.language, this.mode);
      for (const word of this.committed) {
        await this.api.commit(this.sessionId, word);
      }
      return await call();
    }
  }
}
