// Wire shapes of the suggestion service API plus local study-session state.

export interface WordEntry {
  lemma: string;
  forms: string[];
}

export interface ConfusionSetInfo {
  id: string;
  words: WordEntry[];
}

export interface ExampleSentence {
  id: string;
  text: string;
  score: number;
  fitness: number;
  closeness: number;
}

export interface WordSuggestions {
  lemma: string;
  examples: ExampleSentence[];
}

export interface SuggestionResult {
  set: string;
  model_kind: string;
  l1_restricted: boolean;
  l1_fallback: boolean;
  k: number;
  per_word: WordSuggestions[];
  empty_after_filter: string[];
  config_digest: string;
}

export interface ExamplesPage {
  set: string;
  word: string;
  offset: number;
  items: ExampleSentence[];
  total: number;
}

// One translation question: the L1 prompt plus tips for hard words that
// are not themselves under study.
export interface QuestionSpec {
  set: string;
  prompt: string;
  tips: string[];
}

export type StudyMode = "pre" | "post";

export interface StudyConfig {
  apiBase: string;
  mode: StudyMode;
  model: string;
  questions: QuestionSpec[];
}
