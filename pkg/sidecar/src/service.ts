import { IncomingMessage, ServerResponse } from "http";

import { MODEL_IDS, MODEL_IDS_HEADER } from "./config";
import { embedTexts } from "./embed";
import { parseDepth } from "./parse";
import { segmentSentences } from "./segment";

/** Mutable service state shared with the entrypoint; handlers never write it. */
export interface ServiceState {
  ready: boolean;
  token: string;
}

const BODY_LIMIT = 32 * 1024 * 1024;
const OP_PATHS = new Set(["/segment", "/parse-depth", "/embed"]);

class BodyTooLarge extends Error {}

function readBody(req: IncomingMessage, limit: number): Promise<string> {
  return new Promise((resolve, reject) => {
    const parts: Buffer[] = [];
    let size = 0;
    let tooLarge = false;
    req.on("data", (part: Buffer) => {
      if (tooLarge) {
        return;
      }
      size += part.length;
      if (size > limit) {
        tooLarge = true;
        parts.length = 0;
        return;
      }
      parts.push(part);
    });
    req.on("end", () => {
      if (tooLarge) {
        reject(new BodyTooLarge());
      } else {
        resolve(Buffer.concat(parts).toString("utf-8"));
      }
    });
    req.on("error", reject);
  });
}

function send(res: ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
    "X-Model-Ids": MODEL_IDS_HEADER,
  });
  res.end(body);
}

function isNonEmptyString(value: unknown): value is string {
  return typeof value === "string" && value.trim().length > 0;
}

async function route(
  state: ServiceState,
  req: IncomingMessage,
  res: ServerResponse
): Promise<void> {
  const path = (req.url ?? "").split("?")[0];

  if (path === "/healthz") {
    if (req.method !== "GET") {
      send(res, 405, { error: "use GET for /healthz" });
      return;
    }
    send(res, 200, { ready: state.ready, models: MODEL_IDS });
    return;
  }
  if (!OP_PATHS.has(path)) {
    send(res, 404, { error: `unknown path ${path}` });
    return;
  }
  if (req.method !== "POST") {
    send(res, 405, { error: `use POST for ${path}` });
    return;
  }
  if (state.token && req.headers["x-auth-token"] !== state.token) {
    send(res, 401, { error: "missing or wrong X-Auth-Token" });
    return;
  }

  let raw: string;
  try {
    raw = await readBody(req, BODY_LIMIT);
  } catch (err) {
    if (err instanceof BodyTooLarge) {
      send(res, 413, { error: `body exceeds ${BODY_LIMIT} bytes` });
      return;
    }
    throw err;
  }
  if (raw.length === 0) {
    send(res, 400, { error: "empty body" });
    return;
  }
  let body: unknown;
  try {
    body = JSON.parse(raw);
  } catch {
    send(res, 400, { error: "body is not valid JSON" });
    return;
  }
  if (typeof body !== "object" || body === null || Array.isArray(body)) {
    send(res, 400, { error: "body must be a JSON object" });
    return;
  }
  const fields = body as Record<string, unknown>;

  if (path === "/segment") {
    if (!isNonEmptyString(fields.text)) {
      send(res, 400, { error: "text must be a non-empty string" });
      return;
    }
    send(res, 200, { sentences: segmentSentences(fields.text) });
    return;
  }

  if (!state.ready) {
    send(res, 503, { error: "model not loaded" });
    return;
  }

  if (path === "/parse-depth") {
    const sentences = fields.sentences;
    if (!Array.isArray(sentences) || sentences.length === 0) {
      send(res, 400, { error: "sentences must be a non-empty array" });
      return;
    }
    if (!sentences.every(isNonEmptyString)) {
      send(res, 400, { error: "sentences must be non-empty strings" });
      return;
    }
    const results = sentences.map((s) => {
      const parsed = parseDepth(s);
      return { depth: parsed.depth, token_count: parsed.tokenCount };
    });
    send(res, 200, { results });
    return;
  }

  const texts = fields.texts;
  if (!Array.isArray(texts) || texts.length === 0) {
    send(res, 400, { error: "texts must be a non-empty array" });
    return;
  }
  if (!texts.every(isNonEmptyString)) {
    send(res, 400, { error: "texts must be non-empty strings" });
    return;
  }
  send(res, 200, { vectors: embedTexts(texts) });
}

/** Request handler closed over shared state; safe under concurrent requests
 *  because every operation is a pure function of the request body. */
export function buildHandler(
  state: ServiceState
): (req: IncomingMessage, res: ServerResponse) => void {
  return (req, res) => {
    route(state, req, res).catch((err) => {
      console.error(`nlp-sidecar: ${err}`);
      if (!res.headersSent) {
        send(res, 500, { error: "internal error" });
      } else {
        res.end();
      }
    });
  };
}
