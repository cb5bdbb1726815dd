// Node-link rendering of the diagram state as an SVG document string.
// Pure over the model: positions come from the model's client-side layout,
// violation badges from the last CHECK. Dependency-free so it runs in the
// browser and in tests alike.

import { DiagramModel, DiagramNode, nodeLabel } from "./model.js";

const NODE_W = 140;
const NODE_H = 48;

const KIND_FILL: Record<string, string> = {
    Class: "#dbeafe",
    Instance: "#dcfce7",
    Namespace: "#f3f4f6",
    Attribute: "#fef9c3",
    DataType: "#fae8ff",
    Unit: "#fae8ff",
    Constraint: "#ffe4e6",
};

function esc(s: string): string {
    return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function center(node: DiagramNode): { x: number; y: number } {
    return { x: node.position.x + NODE_W / 2, y: node.position.y + NODE_H / 2 };
}

export interface RenderOptions {
    violationsOnly?: boolean;  // visual filtering: draw flagged nodes only
}

export function renderSvg(model: DiagramModel, options: RenderOptions = {}): string {
    const visible = model.visibleNodes()
        .filter((v) => !options.violationsOnly || v.badges.length > 0);
    const byId = new Map(visible.map((v) => [v.node.elementId, v.node]));

    const parts: string[] = [];
    let width = 320;
    let height = 240;
    for (const { node } of visible) {
        width = Math.max(width, node.position.x + NODE_W + 40);
        height = Math.max(height, node.position.y + NODE_H + 40);
    }

    for (const edge of [...model.edges.values()].sort((a, b) => a.elementId - b.elementId)) {
        const a = byId.get(edge.a);
        const b = byId.get(edge.b);
        if (!a || !b) continue;
        const p = center(a);
        const q = center(b);
        const dash = edge.kindBadge === "Inheritance" ? ' stroke-dasharray="6 3"' : "";
        parts.push(`<line x1="${p.x}" y1="${p.y}" x2="${q.x}" y2="${q.y}" stroke="#475569"${dash}/>`);
        parts.push(`<text x="${(p.x + q.x) / 2}" y="${(p.y + q.y) / 2 - 4}" font-size="10" fill="#475569">`
            + `${esc(edge.name)}</text>`);
    }

    for (const { node, badges } of visible) {
        const fill = KIND_FILL[node.kindBadge] ?? "#ffffff";
        const stroke = badges.length > 0 ? "#dc2626" : "#334155";
        const { x, y } = node.position;
        parts.push(`<g data-element="${node.elementId}">`);
        parts.push(`<rect x="${x}" y="${y}" width="${NODE_W}" height="${NODE_H}" rx="6" `
            + `fill="${fill}" stroke="${stroke}" stroke-width="${badges.length > 0 ? 2 : 1}"/>`);
        parts.push(`<text x="${x + 8}" y="${y + 18}" font-size="11" font-weight="bold">`
            + `${esc(nodeLabel(node))}</text>`);
        parts.push(`<text x="${x + 8}" y="${y + 34}" font-size="9" fill="#64748b">`
            + `${esc(node.kindBadge)} #${node.elementId}</text>`);
        badges.forEach((code, i) => {
            parts.push(`<text x="${x + NODE_W - 8}" y="${y - 4 - i * 12}" font-size="9" `
                + `text-anchor="end" fill="#dc2626">${esc(code)}</text>`);
        });
        if (model.collapsed.has(node.elementId)) {
            parts.push(`<text x="${x + NODE_W - 10}" y="${y + 18}" font-size="11">+</text>`);
        }
        parts.push("</g>");
    }

    return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" `
        + `font-family="sans-serif">${parts.join("")}</svg>`;
}
