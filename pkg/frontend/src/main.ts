// Application entry point: load the study configuration, fetch the
// suggestions for each question, and drive the question flow.

import { ApiClient } from "./api";
import { StudySession } from "./session";
import { renderQuestion } from "./view";
import type { StudyConfig } from "./types";

const DEFAULT_CONFIG: StudyConfig = {
  apiBase: "http://127.0.0.1:8000",
  mode: "post",
  model: "gmm",
  questions: [],
};

async function loadConfig(): Promise<StudyConfig> {
  try {
    const resp = await fetch("./study.json");
    if (resp.ok) return { ...DEFAULT_CONFIG, ...(await resp.json()) };
  } catch {
    // fall through to the default below
  }
  return DEFAULT_CONFIG;
}

function sessionId(): string {
  const key = "synex-session-id";
  let id = localStorage.getItem(key);
  if (!id) {
    id = crypto.randomUUID();
    localStorage.setItem(key, id);
  }
  return id;
}

export async function start(root: HTMLElement): Promise<void> {
  const config = await loadConfig();
  const client = new ApiClient(config.apiBase);

  let questions = config.questions;
  if (questions.length === 0) {
    // Without explicit study content, offer one question per known set.
    const sets = await client.listSets();
    questions = sets.map((s) => ({
      set: s.id,
      prompt: `Translate a sentence using one of: ${s.words
        .map((w) => w.lemma)
        .join(", ")}`,
      tips: [],
    }));
  }
  if (questions.length === 0) {
    root.textContent = "No study questions configured.";
    return;
  }

  const session = new StudySession(sessionId(), config.mode, questions);

  const show = async () => {
    const question = session.current;
    if (session.mode === "post" && question.words.length === 0) {
      const result = await client.suggest(question.spec.set, config.model);
      session.initWords(question, result.per_word);
    }
    renderQuestion(root, session, client, config.model, {
      onSubmitted: (finished) => {
        if (!finished) void show();
      },
    });
  };
  await show();
}

const rootElement = document.getElementById("app");
if (rootElement) {
  void start(rootElement);
}
