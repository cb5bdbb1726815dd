// The client-side diagram state. It holds nothing the protocol did not
// return: nodes and edges are built either from a cold refresh
// (LIST/REFLECT/READ) or by folding committed change events, and the two
// paths must produce identical content. Positions are client-side layout
// only and are excluded from the content hash; they are never sent to the
// runtime.

import { ProtocolClient } from "./client.js";
import { ChangeEvent, Token, command } from "./protocol.js";

/** FNV-1a 64-bit over UTF-16 code units; stable, dependency-free, and
 * identical in node and browsers. */
function fnv1a64(text: string): string {
    let hash = 0xcbf29ce484222325n;
    const prime = 0x100000001b3n;
    const mask = 0xffffffffffffffffn;
    for (let i = 0; i < text.length; i += 1) {
        hash ^= BigInt(text.charCodeAt(i));
        hash = (hash * prime) & mask;
    }
    return hash.toString(16).padStart(16, "0");
}

export const NODE_KINDS = [
    "RootFolder", "Namespace", "Constraint", "Class", "Attribute", "DataType", "Unit",
    "Instance", "TransformationModel", "Rule", "Pattern", "Template", "Assignment",
] as const;

export const EDGE_KINDS = ["Association", "Composition", "Inheritance", "LinkOccurrence"] as const;

export const ALL_KINDS = [...NODE_KINDS, ...EDGE_KINDS] as const;

export interface Position {
    x: number;
    y: number;
}

export interface DiagramNode {
    elementId: number;
    kindBadge: string;
    name: string;
    typeText: string | null;   // the element's type value, when it has one
    classRef: number;          // 0 unless an instance
    parentId: number;          // owning element
    violationFlags: string[];
    position: Position;
}

export interface DiagramEdge {
    elementId: number;
    kindBadge: string;
    name: string;
    parentId: number;
    a: number;                 // end a / subclass / link source
    b: number;                 // end b / superclass / link target
    linkage: number;           // 0 unless a LinkOccurrence
    violationFlags: string[];
}

export function nodeLabel(node: DiagramNode): string {
    return node.typeText === null ? node.name : `${node.name}: ${node.typeText}`;
}

export class DiagramModel {
    nodes = new Map<number, DiagramNode>();
    edges = new Map<number, DiagramEdge>();
    collapsed = new Set<number>();

    /** Stable hash of the diagram content; positions and violation badges
     * are excluded, so an event-sourced model and a cold refresh agree. */
    contentHash(): string {
        const nodes = [...this.nodes.values()]
            .sort((a, b) => a.elementId - b.elementId)
            .map((n) => [n.elementId, n.kindBadge, n.name, n.typeText, n.classRef, n.parentId]);
        const edges = [...this.edges.values()]
            .sort((a, b) => a.elementId - b.elementId)
            .map((e) => [e.elementId, e.kindBadge, e.name, e.parentId, e.a, e.b, e.linkage]);
        return fnv1a64(JSON.stringify({ nodes, edges }));
    }

    private defaultPosition(id: number): Position {
        // deterministic grid layout; the user may drag nodes afterwards
        return { x: (id % 8) * 160, y: Math.floor(id / 8) * 120 };
    }

    upsertNode(partial: Omit<DiagramNode, "violationFlags" | "position">): DiagramNode {
        const existing = this.nodes.get(partial.elementId);
        const node: DiagramNode = {
            ...partial,
            violationFlags: existing?.violationFlags ?? [],
            position: existing?.position ?? this.defaultPosition(partial.elementId),
        };
        this.nodes.set(node.elementId, node);
        return node;
    }

    upsertEdge(partial: Omit<DiagramEdge, "violationFlags">): DiagramEdge {
        const existing = this.edges.get(partial.elementId);
        const edge: DiagramEdge = { ...partial, violationFlags: existing?.violationFlags ?? [] };
        this.edges.set(edge.elementId, edge);
        return edge;
    }

    remove(elementId: number): void {
        this.nodes.delete(elementId);
        this.edges.delete(elementId);
        this.collapsed.delete(elementId);
    }

    moveNode(elementId: number, position: Position): void {
        const node = this.nodes.get(elementId);
        if (node) node.position = position;
    }

    setViolations(flags: Map<number, string[]>): void {
        for (const n of this.nodes.values()) n.violationFlags = flags.get(n.elementId) ?? [];
        for (const e of this.edges.values()) e.violationFlags = flags.get(e.elementId) ?? [];
    }

    // -- event sourcing ------------------------------------------------------

    applyEvent(event: ChangeEvent): void {
        const d = event.details;
        switch (event.op) {
            case "CREATED": {
                const kind = d[0]?.text ?? "?";
                const parent = Number(d[1]?.text ?? 0);
                const name = d[2]?.text ?? "";
                if (kind === "Instance") {
                    this.upsertNode({
                        elementId: event.elementId, kindBadge: kind, name,
                        typeText: d[4] && (d[4].quoted || d[4].text !== "-") ? d[4].text : null,
                        classRef: Number(d[3]?.text ?? 0), parentId: parent,
                    });
                } else if ((EDGE_KINDS as readonly string[]).includes(kind)) {
                    this.upsertEdge({
                        elementId: event.elementId, kindBadge: kind, name,
                        parentId: parent, a: 0, b: 0, linkage: 0,
                    });
                } else {
                    this.upsertNode({
                        elementId: event.elementId, kindBadge: kind, name,
                        typeText: null, classRef: 0, parentId: parent,
                    });
                }
                break;
            }
            case "LINKED": {
                this.upsertEdge({
                    elementId: event.elementId, kindBadge: d[0]?.text ?? "LinkOccurrence",
                    name: d[2]?.text ?? "", parentId: Number(d[1]?.text ?? 0),
                    a: 0, b: 0, linkage: 0,
                });
                break;
            }
            case "DELETED":
            case "UNLINKED":
                this.remove(event.elementId);
                break;
            case "RETYPED": {
                const node = this.nodes.get(event.elementId);
                if (node) {
                    node.classRef = Number(d[1]?.text ?? node.classRef);
                    node.typeText = d[2] && (d[2].quoted || d[2].text !== "-") ? d[2].text : null;
                }
                break;
            }
            case "UPDATED": {
                const field = d[0]?.text ?? "";
                const value = d[3];
                this.applyFieldUpdate(event.elementId, field, value);
                break;
            }
        }
    }

    private applyFieldUpdate(elementId: number, field: string, value: Token | undefined): void {
        if (value === undefined) return;
        const node = this.nodes.get(elementId);
        const edge = this.edges.get(elementId);
        if (field === "name") {
            if (node) node.name = value.text;
            if (edge) edge.name = value.text;
        } else if (field === "type" && node) {
            node.typeText = value.quoted || value.text !== "-" ? value.text : null;
        } else if (field === "owner") {
            if (node) node.parentId = Number(value.text);
            if (edge) edge.parentId = Number(value.text);
        } else if (edge) {
            if (field === "enda" || field === "a") edge.a = Number(value.text);
            else if (field === "endb" || field === "b") edge.b = Number(value.text);
            else if (field === "linkage") edge.linkage = Number(value.text);
        }
        // attribute values and meta fields do not appear in the diagram content
    }

    // -- cold refresh ---------------------------------------------------------

    /** Rebuild the whole content from LIST/REFLECT/READ responses only. */
    async coldLoad(client: ProtocolClient): Promise<void> {
        this.nodes.clear();
        this.edges.clear();
        for (const kind of ALL_KINDS) {
            const listed = await client.expectOk(command("LIST", kind));
            for (const tok of listed.tokens) {
                const id = Number(tok.text);
                if ((EDGE_KINDS as readonly string[]).includes(kind)) {
                    await this.loadEdge(client, id, kind);
                } else {
                    await this.loadNode(client, id);
                }
            }
        }
    }

    /** Re-read one element through REFLECT; used for in-transaction drafts,
     * which only the protocol may reveal. */
    async refreshNode(client: ProtocolClient, id: number): Promise<void> {
        await this.loadNode(client, id);
    }

    private async loadNode(client: ProtocolClient, id: number): Promise<void> {
        const r = await client.expectOk(command("REFLECT", id));
        const t = r.tokens;
        const kind = t[0].text;
        const name = t[2].text;
        let owner = 0;
        let classRef = 0;
        let typeText: string | null = null;
        for (let i = 3; i < t.length - 1; i += 1) {
            if (!t[i].quoted && t[i].text === "owner" && i === 3) owner = Number(t[i + 1].text);
            if (!t[i].quoted && t[i].text === "class" && t[i - 1]?.text !== "link") classRef = Number(t[i + 1].text);
            if (!t[i].quoted && t[i].text === "type") {
                const v = t[i + 1];
                typeText = v.quoted || v.text !== "-" ? v.text : null;
            }
            if (!t[i].quoted && (t[i].text === "attr" || t[i].text === "link" || t[i].text === "child")) break;
        }
        this.upsertNode({ elementId: id, kindBadge: kind, name, typeText, classRef, parentId: owner });
    }

    private async loadEdge(client: ProtocolClient, id: number, kind: string): Promise<void> {
        const name = (await client.expectOk(command("READ", id, "name"))).tokens.at(-1)!.text;
        const owner = Number((await client.expectOk(command("READ", id, "owner"))).tokens.at(-1)!.text);
        let a = 0, b = 0, linkage = 0;
        if (kind === "LinkOccurrence") {
            linkage = Number((await client.expectOk(command("READ", id, "linkage"))).tokens.at(-1)!.text);
            a = Number((await client.expectOk(command("READ", id, "a"))).tokens.at(-1)!.text);
            b = Number((await client.expectOk(command("READ", id, "b"))).tokens.at(-1)!.text);
        } else {
            a = Number((await client.expectOk(command("READ", id, "enda"))).tokens.at(-1)!.text);
            b = Number((await client.expectOk(command("READ", id, "endb"))).tokens.at(-1)!.text);
        }
        this.upsertEdge({ elementId: id, kindBadge: kind, name, parentId: owner, a, b, linkage });
    }

    // -- level of detail --------------------------------------------------------

    collapse(elementId: number): void {
        this.collapsed.add(elementId);
    }

    expand(elementId: number): void {
        this.collapsed.delete(elementId);
    }

    private hiddenUnder(rootId: number): number[] {
        const out: number[] = [];
        const walk = (owner: number) => {
            for (const n of this.nodes.values()) {
                if (n.parentId === owner) {
                    out.push(n.elementId);
                    walk(n.elementId);
                }
            }
        };
        walk(rootId);
        return out;
    }

    /** Nodes to draw: collapsed subtrees are hidden, but their violation
     * badges bubble up to the collapsed ancestor. */
    visibleNodes(): { node: DiagramNode; badges: string[] }[] {
        const hidden = new Set<number>();
        for (const c of this.collapsed) for (const id of this.hiddenUnder(c)) hidden.add(id);
        const out: { node: DiagramNode; badges: string[] }[] = [];
        for (const node of [...this.nodes.values()].sort((x, y) => x.elementId - y.elementId)) {
            if (hidden.has(node.elementId)) continue;
            const badges = [...node.violationFlags];
            if (this.collapsed.has(node.elementId)) {
                for (const id of this.hiddenUnder(node.elementId)) {
                    for (const flag of this.nodes.get(id)?.violationFlags ?? []) {
                        if (!badges.includes(flag)) badges.push(flag);
                    }
                }
            }
            out.push({ node, badges });
        }
        return out;
    }

    /** Nodes carrying at least one violation badge (visual filtering). */
    violatingNodes(): DiagramNode[] {
        return [...this.nodes.values()]
            .filter((n) => n.violationFlags.length > 0)
            .sort((a, b) => a.elementId - b.elementId);
    }
}
