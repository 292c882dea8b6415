// Thin typed client for the suggestion service HTTP API.

import type {
  ConfusionSetInfo,
  ExamplesPage,
  ExampleSentence,
  SuggestionResult,
} from "./types";

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private base: string;
  private fetchFn: FetchLike;

  constructor(base: string, fetchFn?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && body.detail) detail = JSON.stringify(body.detail);
      } catch {
        // body was not JSON; keep the status text
      }
      throw new ApiError(resp.status, `${init?.method ?? "GET"} ${path}: ${detail}`);
    }
    return resp;
  }

  async listSets(): Promise<ConfusionSetInfo[]> {
    const resp = await this.request("/sets");
    const doc = await resp.json();
    return doc.sets;
  }

  async suggest(
    set: string,
    model: string,
    k?: number,
    l1Grouped?: boolean,
  ): Promise<SuggestionResult> {
    const body: Record<string, unknown> = { set, model };
    if (k !== undefined) body.k = k;
    if (l1Grouped !== undefined) body.l1_grouped = l1Grouped;
    const resp = await this.request("/suggest", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return resp.json();
  }

  /** One more ranked sentence, or null when the list is exhausted. */
  async nextExample(
    set: string,
    word: string,
    offset: number,
    model: string,
  ): Promise<ExampleSentence | null> {
    const params = new URLSearchParams({
      offset: String(offset),
      limit: "1",
      model,
    });
    const resp = await this.request(
      `/examples/${encodeURIComponent(set)}/${encodeURIComponent(word)}?${params}`,
    );
    const doc: ExamplesPage = await resp.json();
    return doc.items.length > 0 ? doc.items[0] : null;
  }

  async logReadmore(
    session: string,
    set: string,
    word: string,
    revealedCount: number,
  ): Promise<void> {
    await this.request("/events/readmore", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ session, set, word, revealed_count: revealedCount }),
    });
  }

  async submitAnswer(session: string, set: string, text: string): Promise<void> {
    await this.request("/answers", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ session, set, text }),
    });
  }
}
