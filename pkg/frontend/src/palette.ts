// Palette construction from reflective requests. An entry is enabled only
// if the corresponding CREATE (or INSTANTIATE) would not be refused with
// CONTAINMENT_FORBIDDEN, which is exactly what the runtime's reflection
// record advertises via its child/inst tokens.

import { Response } from "./protocol.js";
import { ALL_KINDS } from "./model.js";

export interface PaletteEntry {
    kind: string;          // element kind to CREATE, or "Instance"
    classId: number;       // class to INSTANTIATE when kind === "Instance"
    enabled: boolean;
}

export function buildPalette(reflection: Response): PaletteEntry[] {
    const creatable = new Set<string>();
    const instantiable: number[] = [];
    const t = reflection.tokens;
    for (let i = 0; i < t.length - 1; i += 1) {
        if (t[i].quoted) continue;
        if (t[i].text === "child") creatable.add(t[i + 1].text);
        if (t[i].text === "inst") instantiable.push(Number(t[i + 1].text));
    }
    const entries: PaletteEntry[] = [];
    for (const kind of ALL_KINDS) {
        if (kind === "RootFolder" || kind === "Instance") continue; // never created directly
        entries.push({ kind, classId: 0, enabled: creatable.has(kind) });
    }
    for (const classId of instantiable) {
        entries.push({ kind: "Instance", classId, enabled: true });
    }
    return entries;
}
