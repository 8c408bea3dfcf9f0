/**
 * Signed character-trigram hashing embedder. Text is lowercased and padded
 * with boundary markers, every trigram is FNV-1a hashed, the low byte of the
 * hash picks one of 256 buckets and bit 8 picks the sign, and the bucket
 * counts are L2-normalized. The same text always embeds to the same unit
 * vector.
 */

export const DIMENSION = 256;

function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h = Math.imul(h ^ s.charCodeAt(i), 0x01000193);
  }
  return h >>> 0;
}

/** Embed one non-empty text into a unit vector of DIMENSION floats. */
export function embedText(text: string): number[] {
  const padded = `${text.toLowerCase()}`;
  const vec = new Array<number>(DIMENSION).fill(0);
  for (let i = 0; i + 3 <= padded.length; i++) {
    const h = fnv1a(padded.slice(i, i + 3));
    vec[h % DIMENSION] += (h >>> 8) & 1 ? 1 : -1;
  }
  let norm = Math.sqrt(vec.reduce((acc, x) => acc + x * x, 0));
  if (norm === 0) {
    vec[0] = 1;
    norm = 1;
  }
  return vec.map((x) => x / norm);
}

/** Embed texts in order; vectors align index for index with the input. */
export function embedTexts(texts: string[]): number[][] {
  return texts.map(embedText);
}
