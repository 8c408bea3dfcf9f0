/**
 * Deterministic dependency-depth heuristic over whitespace tokens.
 *
 * Tokens are grouped into chunks: a run of leading function words plus the
 * content words that follow, closed when a function word appears after a
 * content word. The head of a chunk is its last content token (last token if
 * none is content), chunk heads chain left to right, and every non-head
 * member hangs one level below its head. Depth is the node count on the
 * longest root-to-leaf path with the root at 1, so a one-token sentence has
 * depth 1 and depth never exceeds the token count.
 */

const FUNCTION_WORDS = new Set([
  "a", "an", "the",
  "and", "or", "but", "nor", "so", "yet", "if", "because", "while", "when",
  "where", "that", "which", "who", "whom", "whose", "than", "as", "though",
  "although", "unless", "until", "since",
  "of", "in", "on", "at", "to", "for", "with", "from", "by", "into", "onto",
  "over", "under", "between", "through", "during", "before", "after",
  "above", "below", "about", "against", "without", "within", "along",
  "across", "behind", "beyond", "near", "off", "out", "up", "down",
  "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
  "them", "my", "your", "his", "its", "our", "their", "this", "these",
  "those", "there",
  "is", "are", "was", "were", "be", "been", "being", "am", "do", "does",
  "did", "done", "has", "have", "had", "having", "will", "would", "shall",
  "should", "can", "could", "may", "might", "must",
  "not", "no",
]);

export interface DepthResult {
  depth: number;
  tokenCount: number;
}

type Role = "function" | "content" | "punct";

function classify(token: string): Role {
  const core = token.toLowerCase().replace(/[^a-z0-9]/g, "");
  if (core.length === 0) {
    return "punct";
  }
  return FUNCTION_WORDS.has(core) ? "function" : "content";
}

/** Depth and token count for one sentence; the sentence must have a token. */
export function parseDepth(sentence: string): DepthResult {
  const tokens = sentence.split(/\s+/).filter((t) => t.length > 0);
  if (tokens.length === 0) {
    throw new RangeError("sentence has no tokens");
  }
  const chunkSizes: number[] = [];
  let size = 0;
  let sawContent = false;
  for (const token of tokens) {
    const role = classify(token);
    if (role === "function" && sawContent) {
      chunkSizes.push(size);
      size = 0;
      sawContent = false;
    }
    size += 1;
    if (role === "content") {
      sawContent = true;
    }
  }
  chunkSizes.push(size);
  let depth = 0;
  chunkSizes.forEach((n, k) => {
    const headDepth = k + 1;
    depth = Math.max(depth, n > 1 ? headDepth + 1 : headDepth);
  });
  return { depth, tokenCount: tokens.length };
}
