// The generic editor core. Every user gesture becomes a BEGIN..COMMIT
// command sequence over the wire; the local diagram is updated from the
// runtime's committed change events only, never optimistically. On a
// refused commit the runtime rolls back, the violation list is surfaced
// as a toast, and the diagram is untouched.

import { ProtocolClient, ProtocolError } from "./client.js";
import { DiagramModel } from "./model.js";
import { PaletteEntry, buildPalette } from "./palette.js";
import { Violation, command, parseViolations, quote } from "./protocol.js";

export interface GestureResult {
    ok: boolean;
    newId: number;         // fresh element id when the gesture created one
    error: string;         // catalogue code when !ok
    detail: string;
}

export type FieldWrite = { field: string; index: number; token: string };

export class Editor {
    readonly model = new DiagramModel();
    readonly toasts: string[] = [];
    private writable = true;

    constructor(private client: ProtocolClient, private onToast?: (t: string) => void) {
        client.onEvent((e) => this.model.applyEvent(e));
        client.onStray((r) => this.toast(`${r.code}: ${r.message}`));
        // connection loss degrades to a read-only view; no edits are queued
        client.onClose(() => {
            if (this.writable) {
                this.writable = false;
                this.toast("connection lost: read-only");
            }
        });
    }

    get isWritable(): boolean {
        return this.writable;
    }

    setReadOnly(): void {
        this.writable = false;
    }

    private toast(text: string): void {
        this.toasts.push(text);
        this.onToast?.(text);
    }

    /** Subscribe to change events and take the initial cold snapshot. */
    async connect(): Promise<void> {
        await this.client.expectOk(command("SUBSCRIBE"));
        await this.model.coldLoad(this.client);
    }

    // -- gestures ---------------------------------------------------------------

    /** Wraps the lines in BEGIN..COMMIT. Lines may reference the id returned
     * by the creating command (index createdAt) with an "@" placeholder. */
    private async transaction(lines: string[], createdAt = -1): Promise<GestureResult> {
        if (!this.writable) {
            return { ok: false, newId: 0, error: "BUSY", detail: "session is read-only" };
        }
        await this.client.expectOk(command("BEGIN"));
        let newId = 0;
        try {
            for (let i = 0; i < lines.length; i += 1) {
                const line = lines[i].replace(" @ ", ` ${newId} `);
                const r = await this.client.expectOk(line);
                if (i === createdAt) newId = Number(r.tokens[0]?.text ?? 0);
            }
        } catch (err) {
            await this.client.request(command("ROLLBACK"));
            const pe = err as ProtocolError;
            this.toast(`${pe.code}: ${pe.detail}`);
            return { ok: false, newId: 0, error: pe.code, detail: pe.detail };
        }
        const commit = await this.client.request(command("COMMIT"));
        if (!commit.ok) {
            // the runtime rolled the whole transaction back; nothing changed
            this.toast(`${commit.code}: ${commit.message}`);
            return { ok: false, newId: 0, error: commit.code, detail: commit.message };
        }
        return { ok: true, newId, error: "", detail: "" };
    }

    createElement(kind: string, ownerId: number, name: string, fields: FieldWrite[] = []): Promise<GestureResult> {
        const lines = [command("CREATE", kind, ownerId, quote(name))];
        for (const f of fields) lines.push(`UPDATE @ ${f.field} ${f.index} ${f.token}`);
        return this.transaction(lines, 0);
    }

    instantiate(classId: number, parentId: number, name: string, fields: FieldWrite[] = []): Promise<GestureResult> {
        const lines = [command("INSTANTIATE", classId, parentId, quote(name))];
        for (const f of fields) lines.push(`UPDATE @ ${f.field} ${f.index} ${f.token}`);
        return this.transaction(lines, 0);
    }

    drawLink(folderId: number, name: string, linkageId: number, a: number, b: number): Promise<GestureResult> {
        return this.transaction([
            command("CREATE", "LinkOccurrence", folderId, quote(name)),
            `UPDATE @ linkage 0 ${linkageId}`,
            `UPDATE @ a 0 ${a}`,
            `UPDATE @ b 0 ${b}`,
        ], 0);
    }

    setValue(elementId: number, field: string, index: number, token: string): Promise<GestureResult> {
        return this.transaction([command("UPDATE", elementId, field, index, token)]);
    }

    rename(elementId: number, name: string): Promise<GestureResult> {
        return this.transaction([command("UPDATE", elementId, "name", 0, quote(name))]);
    }

    retype(instanceId: number, classId: number): Promise<GestureResult> {
        return this.transaction([command("RETYPE", instanceId, classId)]);
    }

    deleteElement(elementId: number): Promise<GestureResult> {
        return this.transaction([command("DELETE", elementId)]);
    }

    /** Await a round trip so previously committed events are folded in. */
    async settle(): Promise<void> {
        await this.client.request(command("LIST", "RootFolder"));
    }

    // -- draft mode -------------------------------------------------------------
    //
    // A long-running transaction for step-wise construction. Draft elements
    // exist on the runtime only; the diagram shows them by re-reading them
    // through REFLECT, so state authority never moves to the client. A
    // rolled-back draft is resynchronized with a cold refresh (the runtime
    // emits no events for it).

    async beginDraft(): Promise<void> {
        await this.client.expectOk(command("BEGIN"));
    }

    async draftInstantiate(classId: number, parentId: number, name: string): Promise<number> {
        const r = await this.client.expectOk(command("INSTANTIATE", classId, parentId, quote(name)));
        const id = Number(r.tokens[0].text);
        await this.model.refreshNode(this.client, id);
        return id;
    }

    async draftSetValue(elementId: number, field: string, index: number, token: string): Promise<void> {
        await this.client.expectOk(command("UPDATE", elementId, field, index, token));
        await this.model.refreshNode(this.client, elementId);
    }

    async commitDraft(): Promise<GestureResult> {
        const commit = await this.client.request(command("COMMIT"));
        if (!commit.ok) {
            this.toast(`${commit.code}: ${commit.message}`);
            await this.model.coldLoad(this.client);
            return { ok: false, newId: 0, error: commit.code, detail: commit.message };
        }
        return { ok: true, newId: 0, error: "", detail: "" };
    }

    async rollbackDraft(): Promise<void> {
        await this.client.request(command("ROLLBACK"));
        await this.model.coldLoad(this.client);
    }

    // -- consistency highlighting --------------------------------------------------

    /** CHECK the runtime and badge every violating element. */
    async highlightViolations(scope?: number): Promise<Violation[]> {
        const r = await this.client.expectOk(
            scope === undefined ? command("CHECK") : command("CHECK", scope));
        const violations = parseViolations(r.tokens);
        const flags = new Map<number, string[]>();
        for (const v of violations) {
            const list = flags.get(v.elementId) ?? [];
            if (!list.includes(v.code)) list.push(v.code);
            flags.set(v.elementId, list);
        }
        this.model.setViolations(flags);
        return violations;
    }

    // -- palette ---------------------------------------------------------------------

    async paletteFor(selectionId: number): Promise<PaletteEntry[]> {
        const r = await this.client.expectOk(command("REFLECT", selectionId));
        return buildPalette(r);
    }
}
