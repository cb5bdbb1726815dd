// Node-only transport: a TCP client for the runtime's serve socket.
// Kept out of connection.ts so browser bundles never touch node:net.

import * as net from "node:net";

import { Connection } from "./connection.js";

export class TcpConnection implements Connection {
    private socket: net.Socket;
    private buffer = "";
    private lineHandlers: ((line: string) => void)[] = [];
    private closeHandlers: (() => void)[] = [];

    private constructor(socket: net.Socket) {
        this.socket = socket;
        socket.setEncoding("utf-8");
        socket.on("data", (chunk: string) => {
            this.buffer += chunk;
            for (;;) {
                const nl = this.buffer.indexOf("\n");
                if (nl < 0) break;
                const line = this.buffer.slice(0, nl);
                this.buffer = this.buffer.slice(nl + 1);
                for (const h of this.lineHandlers) h(line);
            }
        });
        socket.on("close", () => {
            for (const h of this.closeHandlers) h();
        });
    }

    static connect(host: string, port: number): Promise<TcpConnection> {
        return new Promise((resolve, reject) => {
            const socket = net.createConnection({ host, port }, () => resolve(new TcpConnection(socket)));
            socket.once("error", reject);
        });
    }

    send(line: string): void {
        this.socket.write(line + "\n");
    }

    onLine(handler: (line: string) => void): void {
        this.lineHandlers.push(handler);
    }

    onClose(handler: () => void): void {
        this.closeHandlers.push(handler);
    }

    close(): void {
        this.socket.end();
    }
}
