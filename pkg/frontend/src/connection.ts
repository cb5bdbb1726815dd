// Transports. The editor core only sees the Connection interface; the
// runtime is reached over a TCP socket (node, see tcp.ts) or a WebSocket
// bridge (browser). A RecordingProxy wraps any connection and keeps every
// outbound line, which is how the zero-authority property is audited: the
// byte stream from editor to runtime is exactly these lines.

export interface Connection {
    send(line: string): void;
    onLine(handler: (line: string) => void): void;
    onClose(handler: () => void): void;
    close(): void;
}

/** Browser-side transport over a WebSocket carrying one protocol line per
 * message. Kept transport-thin so the editor core stays identical. */
export class WebSocketConnection implements Connection {
    private lineHandlers: ((line: string) => void)[] = [];
    private closeHandlers: (() => void)[] = [];

    constructor(private ws: {
        send(data: string): void;
        close(): void;
        onmessage: ((ev: { data: unknown }) => void) | null;
        onclose: (() => void) | null;
    }) {
        ws.onmessage = (ev) => {
            for (const raw of String(ev.data).split("\n")) {
                if (raw !== "") for (const h of this.lineHandlers) h(raw);
            }
        };
        ws.onclose = () => {
            for (const h of this.closeHandlers) h();
        };
    }

    send(line: string): void {
        this.ws.send(line + "\n");
    }

    onLine(handler: (line: string) => void): void {
        this.lineHandlers.push(handler);
    }

    onClose(handler: () => void): void {
        this.closeHandlers.push(handler);
    }

    close(): void {
        this.ws.close();
    }
}

export class RecordingProxy implements Connection {
    readonly sent: string[] = [];
    readonly received: string[] = [];

    constructor(private inner: Connection) {
        inner.onLine((line) => this.received.push(line));
    }

    send(line: string): void {
        this.sent.push(line);
        this.inner.send(line);
    }

    onLine(handler: (line: string) => void): void {
        this.inner.onLine(handler);
    }

    onClose(handler: () => void): void {
        this.inner.onClose(handler);
    }

    close(): void {
        this.inner.close();
    }
}
