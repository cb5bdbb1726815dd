import assert from "node:assert/strict";
import { test } from "node:test";

import { ProtocolClient } from "../src/client.js";
import { Connection } from "../src/connection.js";
import { Editor } from "../src/editor.js";

/** In-memory connection answering each sent line with the next scripted reply. */
class FakeConnection implements Connection {
    sent: string[] = [];
    replies: string[] = [];
    private lineHandlers: ((line: string) => void)[] = [];
    private closeHandlers: (() => void)[] = [];

    send(line: string): void {
        this.sent.push(line);
        const reply = this.replies.shift();
        if (reply !== undefined) {
            queueMicrotask(() => {
                for (const h of this.lineHandlers) h(reply);
            });
        }
    }

    dropConnection(): void {
        for (const h of this.closeHandlers) h();
    }

    onLine(handler: (line: string) => void): void {
        this.lineHandlers.push(handler);
    }

    onClose(handler: () => void): void {
        this.closeHandlers.push(handler);
    }

    close(): void { /* nothing to release */ }
}

test("connection loss switches the editor to read-only with no queued edits", async () => {
    const conn = new FakeConnection();
    const editor = new Editor(new ProtocolClient(conn));
    assert.ok(editor.isWritable);
    conn.dropConnection();
    assert.ok(!editor.isWritable);
    assert.ok(editor.toasts.some((t) => t.includes("read-only")));
    const sentBefore = conn.sent.length;
    const refused = await editor.rename(5, "nope");
    assert.ok(!refused.ok);
    assert.equal(conn.sent.length, sentBefore);  // nothing was queued or sent
});

test("gesture failure mid-transaction rolls back and surfaces a toast", async () => {
    const conn = new FakeConnection();
    // scripted far end: BEGIN ok, CREATE refused, ROLLBACK acknowledged
    conn.replies = ["1 OK", '2 ERR UNKNOWN_ID "element 99 does not resolve"', "3 OK"];
    const editor = new Editor(new ProtocolClient(conn));
    const result = await editor.createElement("Class", 99, "C");
    assert.ok(!result.ok);
    assert.equal(result.error, "UNKNOWN_ID");
    assert.deepEqual(conn.sent, ["BEGIN", 'CREATE Class 99 "C"', "ROLLBACK"]);
    assert.ok(editor.toasts[0].startsWith("UNKNOWN_ID"));
    assert.equal(editor.model.nodes.size, 0);  // no local mutation happened
});
