// Request/response correlation over a Connection. Responses arrive in
// command order (the runtime is single-writer), so a FIFO of pending
// resolvers is sufficient; EVT lines are fanned out to event listeners.

import { Connection } from "./connection.js";
import { ChangeEvent, Response, parseServerLine } from "./protocol.js";

export class ProtocolError extends Error {
    constructor(readonly code: string, readonly detail: string) {
        super(`${code}: ${detail}`);
    }
}

export class ProtocolClient {
    private pending: ((r: Response) => void)[] = [];
    private eventHandlers: ((e: ChangeEvent) => void)[] = [];
    private closeHandlers: (() => void)[] = [];
    private stray: ((r: Response) => void) | null = null;

    constructor(private connection: Connection) {
        connection.onLine((line) => this.handleLine(line));
        connection.onClose(() => {
            for (const h of this.closeHandlers) h();
        });
    }

    onClose(handler: () => void): void {
        this.closeHandlers.push(handler);
    }

    private handleLine(line: string): void {
        const parsed = parseServerLine(line);
        if (parsed.kind === "event") {
            for (const h of this.eventHandlers) h(parsed.event);
            return;
        }
        if (parsed.response.seq === 0) {
            // unsolicited line (BUSY refusals, event-overflow notices)
            if (this.stray) this.stray(parsed.response);
            return;
        }
        const resolve = this.pending.shift();
        if (resolve) resolve(parsed.response);
    }

    onEvent(handler: (e: ChangeEvent) => void): void {
        this.eventHandlers.push(handler);
    }

    onStray(handler: (r: Response) => void): void {
        this.stray = handler;
    }

    /** Send one command line and await its response. */
    request(line: string): Promise<Response> {
        return new Promise((resolve) => {
            this.pending.push(resolve);
            this.connection.send(line);
        });
    }

    /** Like request(), but failure becomes a ProtocolError. */
    async expectOk(line: string): Promise<Response> {
        const r = await this.request(line);
        if (!r.ok) throw new ProtocolError(r.code, r.message);
        return r;
    }

    close(): void {
        this.connection.close();
    }
}
