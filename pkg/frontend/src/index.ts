export { ProtocolClient, ProtocolError } from "./client.js";
export { Connection, RecordingProxy, WebSocketConnection } from "./connection.js";
export { TcpConnection } from "./tcp.js";
export { RenderOptions, renderSvg } from "./render.js";
export { Editor, FieldWrite, GestureResult } from "./editor.js";
export {
    ALL_KINDS,
    DiagramEdge,
    DiagramModel,
    DiagramNode,
    EDGE_KINDS,
    NODE_KINDS,
    nodeLabel,
} from "./model.js";
export { PaletteEntry, buildPalette } from "./palette.js";
export {
    ChangeEvent,
    Response,
    Token,
    VERBS,
    Violation,
    command,
    isValidCommandLine,
    parseServerLine,
    parseViolations,
    quote,
    tokenize,
    valueToken,
} from "./protocol.js";
