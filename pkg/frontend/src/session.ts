// Study-session state: which question is active, what each word has
// revealed so far, and the learner's typed translations.  Pure state
// transitions live here so they can be tested without a DOM; all counts
// advance only after the corresponding API call succeeded.

import type { ExampleSentence, QuestionSpec, StudyMode } from "./types";

export const MAX_REVEALED = 5;

export interface WordState {
  lemma: string;
  // Revealed sentences, in server rank order; index 0 is shown initially.
  revealed: ExampleSentence[];
  // True once the server reported no further sentence before the cap.
  exhausted: boolean;
}

export interface QuestionState {
  spec: QuestionSpec;
  words: WordState[];
  translation: string;
  submitted: boolean;
}

export class StudySession {
  readonly id: string;
  readonly mode: StudyMode;
  readonly questions: QuestionState[];
  private cursor = 0;

  constructor(id: string, mode: StudyMode, specs: QuestionSpec[]) {
    if (!id) throw new Error("session id must be non-empty");
    this.id = id;
    this.mode = mode;
    this.questions = specs.map((spec) => ({
      spec,
      words: [],
      translation: "",
      submitted: false,
    }));
  }

  get index(): number {
    return this.cursor;
  }

  get current(): QuestionState {
    return this.questions[this.cursor];
  }

  get complete(): boolean {
    return this.questions.every((q) => q.submitted);
  }

  /** Install the fetched suggestions: one sentence revealed per word. */
  initWords(question: QuestionState, perWord: { lemma: string; examples: ExampleSentence[] }[]): void {
    question.words = perWord.map(({ lemma, examples }) => ({
      lemma,
      revealed: examples.slice(0, 1),
      exhausted: examples.length === 0,
    }));
  }

  word(question: QuestionState, lemma: string): WordState {
    const state = question.words.find((w) => w.lemma === lemma);
    if (!state) throw new Error(`no such word in question: ${lemma}`);
    return state;
  }

  canReadMore(word: WordState): boolean {
    return !word.exhausted && word.revealed.length < MAX_REVEALED;
  }

  /** Append a server-delivered sentence; never reorders, never exceeds the cap. */
  reveal(word: WordState, sentence: ExampleSentence | null): void {
    if (sentence === null) {
      word.exhausted = true;
      return;
    }
    if (word.revealed.length >= MAX_REVEALED) {
      throw new Error(`readmore beyond the ${MAX_REVEALED}-sentence cap`);
    }
    word.revealed.push(sentence);
  }

  setTranslation(question: QuestionState, text: string): void {
    question.translation = text;
  }

  /** Mark the active question answered and move on; returns false when done. */
  advance(): boolean {
    this.current.submitted = true;
    if (this.cursor + 1 < this.questions.length) {
      this.cursor += 1;
      return true;
    }
    return false;
  }
}
