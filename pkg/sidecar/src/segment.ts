/** Sentence boundary: terminal punctuation followed by whitespace. */
const BOUNDARY = /(?<=[.!?…])\s+/;

/**
 * Split text into ordered sentences. Parts are trimmed and empty parts are
 * dropped, so concatenating the result reconstructs the input modulo
 * whitespace. Text without a terminal boundary comes back as one sentence.
 */
export function segmentSentences(text: string): string[] {
  return text
    .split(BOUNDARY)
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
}
