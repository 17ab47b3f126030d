export { textDigest } from "./digest.js";
export {
  StoredVector,
  StoreFormat,
  StoreFormatError,
  encodeJsonl,
  encodePacked,
  writeStore,
  readStore,
} from "./store.js";
export { EmbeddingBackend, ModelLoadError, devBackend, loadBackend } from "./backend.js";
export { readTexts } from "./texts.js";
export {
  ExportJob,
  ExportResult,
  ExportError,
  runExport,
  embedBatched,
  normalizeVector,
} from "./job.js";
export { createServer, listen } from "./server.js";
export { main } from "./cli.js";
