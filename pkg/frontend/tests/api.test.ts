import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { createFakeServer, makeExamples } from "./fake-server";

function setup() {
  const server = createFakeServer("refuse_reject", {
    refuse: makeExamples("refuse", 5),
    reject: makeExamples("reject", 2),
  });
  return { server, client: new ApiClient("http://fake/", server.fetchFn) };
}

describe("ApiClient", () => {
  it("lists confusion sets", async () => {
    const { client } = setup();
    const sets = await client.listSets();
    expect(sets).toHaveLength(1);
    expect(sets[0].id).toBe("refuse_reject");
  });

  it("builds the examples URL with offset, limit and model", async () => {
    const { server, client } = setup();
    const sentence = await client.nextExample("refuse_reject", "refuse", 2, "bilstm");
    expect(sentence!.id).toBe("refuse-2");
    expect(server.requestLog.at(-1)).toBe(
      "GET /examples/refuse_reject/refuse?offset=2&limit=1&model=bilstm",
    );
  });

  it("returns null when the ranked list is exhausted", async () => {
    const { client } = setup();
    expect(await client.nextExample("refuse_reject", "reject", 2, "gmm")).toBeNull();
  });

  it("maps HTTP errors to ApiError with the status code", async () => {
    const { client } = setup();
    await expect(client.nextExample("refuse_reject", "refuse", 9, "gmm")).rejects.toThrowError(
      ApiError,
    );
    try {
      await client.nextExample("refuse_reject", "refuse", 9, "gmm");
    } catch (error) {
      expect((error as ApiError).status).toBe(400);
    }
  });

  it("propagates suggestion payloads untouched", async () => {
    const { client } = setup();
    const result = await client.suggest("refuse_reject", "gmm", 5);
    expect(result.per_word.map((w) => w.lemma)).toEqual(["refuse", "reject"]);
    expect(result.per_word[0].examples).toHaveLength(5);
    expect(result.per_word[1].examples).toHaveLength(2);
  });

  it("posts readmore events with the revealed count", async () => {
    const { server, client } = setup();
    await client.logReadmore("s1", "refuse_reject", "refuse", 3);
    expect(server.events).toEqual([
      { session: "s1", set: "refuse_reject", word: "refuse", revealed_count: 3 },
    ]);
  });

  it("round-trips answer text byte for byte", async () => {
    const { server, client } = setup();
    const text = 'She said: "never mind" - twice.';
    await client.submitAnswer("s1", "refuse_reject", text);
    expect(server.answers[0].text).toBe(text);
  });
});
