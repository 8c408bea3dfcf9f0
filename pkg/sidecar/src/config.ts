/** Pinned model identifiers, echoed in every response header for provenance. */
export const MODEL_IDS = {
  segment: "rule-punct-split.v1",
  parse: "chunk-attach.v1",
  embed: "hash-trigram-256.v1",
} as const;

/** Header value listing every pinned model, stable across requests. */
export const MODEL_IDS_HEADER = Object.entries(MODEL_IDS)
  .map(([capability, id]) => `${capability}=${id}`)
  .join("; ");
