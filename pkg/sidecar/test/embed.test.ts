import assert from "node:assert/strict";
import { test } from "node:test";

import { DIMENSION, embedText, embedTexts } from "../src/embed";

function dot(a: number[], b: number[]): number {
  let acc = 0;
  for (let i = 0; i < a.length; i++) {
    acc += a[i] * b[i];
  }
  return acc;
}

test("vectors have the pinned dimension and unit norm", () => {
  for (const text of ["a", "short", "A much longer sentence with many trigrams."]) {
    const vec = embedText(text);
    assert.equal(vec.length, DIMENSION);
    assert.ok(Math.abs(Math.sqrt(dot(vec, vec)) - 1) < 1e-12, text);
  }
});

test("same text embeds to the identical vector", () => {
  const [a, b] = embedTexts(["repeat me", "repeat me"]);
  assert.deepEqual(a, b);
  assert.deepEqual(embedText("repeat me"), a);
});

test("self-cosine is 1", () => {
  const vec = embedText("cosine with itself");
  assert.ok(Math.abs(dot(vec, vec) - 1) < 1e-12);
});

test("unrelated fixture texts stay below the loose cosine bound", () => {
  const [a, b] = embedTexts([
    "The train arrives at nine in the morning.",
    "Quartz crystals resonate at a fixed frequency.",
  ]);
  assert.ok(Math.abs(dot(a, b)) < 0.9);
});

test("vectors align with input order", () => {
  const texts = ["first text", "second text", "third text"];
  const forward = embedTexts(texts);
  const reversed = embedTexts([...texts].reverse());
  assert.deepEqual(forward[0], reversed[2]);
  assert.deepEqual(forward[2], reversed[0]);
});

test("different texts embed differently", () => {
  const [a, b] = embedTexts(["alpha beta gamma", "delta epsilon zeta"]);
  assert.notDeepEqual(a, b);
});

test("case folds before hashing", () => {
  assert.deepEqual(embedText("MiXeD CaSe"), embedText("mixed case"));
});
