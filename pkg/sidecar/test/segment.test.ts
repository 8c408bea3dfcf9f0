import assert from "node:assert/strict";
import { test } from "node:test";

import { segmentSentences } from "../src/segment";

test("splits at terminal punctuation before whitespace", () => {
  assert.deepEqual(segmentSentences("A. B."), ["A.", "B."]);
  assert.deepEqual(segmentSentences("One! Two? Three… Four."), [
    "One!",
    "Two?",
    "Three…",
    "Four.",
  ]);
});

test("text without a boundary is one sentence", () => {
  assert.deepEqual(segmentSentences("no terminal punctuation here"), [
    "no terminal punctuation here",
  ]);
  assert.deepEqual(segmentSentences("Single sentence."), ["Single sentence."]);
});

test("whitespace-only text yields no sentences", () => {
  assert.deepEqual(segmentSentences("   \n\t "), []);
});

test("concatenation reconstructs the input modulo whitespace", () => {
  const texts = [
    "First point. Second point! Third point? Done.",
    "  Leading space. Trailing space. ",
    "Decimals like 3.14 stay joined because no space follows the dot.",
    "Linebreaks\nare not boundaries. New sentence.",
  ];
  for (const text of texts) {
    const joined = segmentSentences(text).join("");
    assert.equal(joined.replace(/\s+/g, ""), text.replace(/\s+/g, ""));
  }
});

test("abbreviation dots before spaces do split, by documented rule", () => {
  assert.deepEqual(segmentSentences("See Dr. Smith."), ["See Dr.", "Smith."]);
});
