import { createServer } from "http";
import type { AddressInfo } from "net";

import { embedTexts } from "./embed";
import { parseDepth } from "./parse";
import { segmentSentences } from "./segment";
import { buildHandler, ServiceState } from "./service";

const state: ServiceState = {
  ready: false,
  token: process.env.NLP_SIDECAR_TOKEN ?? "",
};

const port = Number(process.env.NLP_SIDECAR_PORT ?? "8600");
if (!Number.isInteger(port) || port < 0 || port > 65535) {
  console.error(`nlp-sidecar: bad NLP_SIDECAR_PORT ${process.env.NLP_SIDECAR_PORT}`);
  process.exit(2);
}

const server = createServer(buildHandler(state));

// Exercise each engine once before accepting traffic, then flip readiness.
segmentSentences("Warm up. Ready.");
parseDepth("Warm up.");
embedTexts(["warm up"]);
state.ready = true;

server.listen(port, "127.0.0.1", () => {
  const addr = server.address() as AddressInfo;
  console.log(`nlp-sidecar listening on ${addr.port}`);
});
