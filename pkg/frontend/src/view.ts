// DOM rendering and event wiring for one translation question.
//
// Layout per question: prompt, tips, one panel per confusing word with
// its revealed example sentences and a readmore button (post-test only),
// then the translation box and a submit button.  At most one readmore
// request is in flight per control, and the revealed count advances only
// when the server answered.

import { ApiClient } from "./api";
import { MAX_REVEALED, StudySession } from "./session";
import type { QuestionState, WordState } from "./session";

export interface ViewCallbacks {
  onSubmitted?: (finished: boolean) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderExampleList(word: WordState): HTMLUListElement {
  const list = el("ul", "examples");
  list.dataset.word = word.lemma;
  for (const sentence of word.revealed) {
    const item = el("li", "example", sentence.text);
    item.dataset.exampleId = sentence.id;
    list.appendChild(item);
  }
  return list;
}

function renderWordPanel(
  session: StudySession,
  question: QuestionState,
  word: WordState,
  client: ApiClient,
): HTMLElement {
  const panel = el("section", "word-panel");
  panel.dataset.word = word.lemma;
  panel.appendChild(el("h3", "word-title", word.lemma));

  if (word.revealed.length === 0) {
    panel.appendChild(el("p", "no-examples", "no examples available"));
    return panel;
  }

  panel.appendChild(renderExampleList(word));

  const button = el("button", "readmore", "read more");
  button.type = "button";
  const status = el("span", "readmore-status", "");
  const sync = () => {
    button.disabled = !session.canReadMore(word);
  };
  sync();

  button.addEventListener("click", async () => {
    if (button.disabled) return;
    button.disabled = true; // one request in flight per control
    status.textContent = "";
    const offset = word.revealed.length;
    try {
      const sentence = await client.nextExample(
        question.spec.set,
        word.lemma,
        offset,
        sessionModel(session),
      );
      session.reveal(word, sentence);
      if (sentence !== null) {
        const list = panel.querySelector("ul.examples")!;
        const item = el("li", "example", sentence.text);
        item.dataset.exampleId = sentence.id;
        list.appendChild(item);
        try {
          await client.logReadmore(
            session.id,
            question.spec.set,
            word.lemma,
            word.revealed.length,
          );
        } catch {
          // Logging is best-effort; the revealed sentence stays.
        }
      }
      sync();
    } catch {
      status.textContent = "could not load more - try again";
      sync(); // count unchanged; the control re-enables for a retry
    }
  });

  panel.appendChild(button);
  panel.appendChild(status);
  return panel;
}

// The model the suggestions were fetched with; attached by render().
const modelBySession = new WeakMap<StudySession, string>();

function sessionModel(session: StudySession): string {
  return modelBySession.get(session) ?? "gmm";
}

export function renderQuestion(
  root: HTMLElement,
  session: StudySession,
  client: ApiClient,
  model: string,
  callbacks: ViewCallbacks = {},
): void {
  modelBySession.set(session, model);
  const question = session.current;
  root.textContent = "";

  const container = el("div", "question");
  container.dataset.set = question.spec.set;

  const header = el("header");
  header.appendChild(
    el("h2", "progress", `Question ${session.index + 1} of ${session.questions.length}`),
  );
  header.appendChild(el("p", "prompt", question.spec.prompt));
  if (question.spec.tips.length > 0) {
    const tips = el("p", "tips", `Tips: ${question.spec.tips.join(", ")}`);
    header.appendChild(tips);
  }
  container.appendChild(header);

  if (session.mode === "post") {
    const panels = el("div", "example-panel");
    for (const word of question.words) {
      panels.appendChild(renderWordPanel(session, question, word, client));
    }
    container.appendChild(panels);
  }

  const form = el("form", "answer");
  form.addEventListener("submit", (event) => event.preventDefault());
  const textarea = el("textarea", "translation");
  textarea.placeholder = "Type your English translation here";
  textarea.value = question.translation;
  textarea.addEventListener("input", () => {
    session.setTranslation(question, textarea.value);
  });
  form.appendChild(textarea);

  const feedback = el("p", "feedback", "");
  const submit = el("button", "submit", "Submit translation");
  submit.type = "submit";
  form.addEventListener("submit", async () => {
    const text = textarea.value.trim();
    if (!text) {
      feedback.textContent = "Please enter a translation first.";
      return;
    }
    submit.disabled = true;
    try {
      await client.submitAnswer(session.id, question.spec.set, text);
      session.setTranslation(question, text);
      const more = session.advance();
      if (more) {
        callbacks.onSubmitted?.(false);
      } else {
        root.textContent = "";
        root.appendChild(el("p", "done", "All questions completed. Thank you!"));
        callbacks.onSubmitted?.(true);
      }
    } catch {
      feedback.textContent = "Could not save the answer - try again.";
      submit.disabled = false;
    }
  });
  form.appendChild(submit);
  form.appendChild(feedback);
  container.appendChild(form);

  root.appendChild(container);
}

export { MAX_REVEALED };
