import assert from "node:assert/strict";
import { test } from "node:test";

import { DiagramModel, nodeLabel } from "../src/model.js";
import { ChangeEvent, parseServerLine } from "../src/protocol.js";

function evt(line: string): ChangeEvent {
    const parsed = parseServerLine(line);
    if (parsed.kind !== "event") throw new Error("not an event");
    return parsed.event;
}

const LOG = [
    'EVT 1 1 CREATED 4 Namespace 2 "signals"',
    'EVT 1 2 CREATED 5 Class 4 "Signal"',
    'EVT 1 3 UPDATED 5 type 0 - "sig"',
    'EVT 2 1 CREATED 6 Instance 3 "s1" 5 "sig"',
    'EVT 2 2 CREATED 7 Association 4 "peer"',
    'EVT 2 3 UPDATED 7 enda 0 0 5',
    'EVT 2 4 UPDATED 7 endb 0 0 5',
    'EVT 3 1 CREATED 8 Instance 3 "s2" 5 "sig"',
    'EVT 3 2 LINKED 9 LinkOccurrence 3 "l1"',
    'EVT 3 3 UPDATED 9 linkage 0 0 7',
    'EVT 3 4 UPDATED 9 a 0 0 6',
    'EVT 3 5 UPDATED 9 b 0 0 8',
];


test("replaying a recorded event log reproduces the content", () => {
    const a = new DiagramModel();
    const b = new DiagramModel();
    for (const line of LOG) a.applyEvent(evt(line));
    for (const line of LOG) b.applyEvent(evt(line));
    assert.equal(a.contentHash(), b.contentHash());
    assert.equal(a.nodes.size, 4);
    assert.equal(a.edges.size, 2);
    const link = a.edges.get(9)!;
    assert.deepEqual([link.linkage, link.a, link.b], [7, 6, 8]);
});

test("node labels combine name and type text", () => {
    const m = new DiagramModel();
    for (const line of LOG) m.applyEvent(evt(line));
    assert.equal(nodeLabel(m.nodes.get(6)!), "s1: sig");
    assert.equal(nodeLabel(m.nodes.get(4)!), "signals");
});

test("deletion events remove content; rename relabels", () => {
    const m = new DiagramModel();
    for (const line of LOG) m.applyEvent(evt(line));
    m.applyEvent(evt('EVT 4 1 UPDATED 6 name 0 "s1" "renamed"'));
    assert.equal(m.nodes.get(6)!.name, "renamed");
    m.applyEvent(evt("EVT 5 1 UNLINKED 9 LinkOccurrence 3"));
    m.applyEvent(evt("EVT 5 2 DELETED 8 Instance 3"));
    assert.ok(!m.edges.has(9));
    assert.ok(!m.nodes.has(8));
});

test("retype event updates class and type text", () => {
    const m = new DiagramModel();
    for (const line of LOG) m.applyEvent(evt(line));
    m.applyEvent(evt('EVT 4 1 RETYPED 6 5 11 "power"'));
    assert.equal(m.nodes.get(6)!.classRef, 11);
    assert.equal(m.nodes.get(6)!.typeText, "power");
});

test("positions are client-side and excluded from the content hash", () => {
    const m = new DiagramModel();
    for (const line of LOG) m.applyEvent(evt(line));
    const before = m.contentHash();
    m.moveNode(6, { x: 999, y: 777 });
    assert.equal(m.contentHash(), before);
    assert.deepEqual(m.nodes.get(6)!.position, { x: 999, y: 777 });
});

test("collapsed subtrees hide nodes and bubble badges to the ancestor", () => {
    const m = new DiagramModel();
    for (const line of LOG) m.applyEvent(evt(line));
    // make s1 own a child, then flag the child
    m.applyEvent(evt('EVT 6 1 CREATED 10 Instance 6 "part" 5 "sig"'));
    m.setViolations(new Map([[10, ["LOWER_BOUND"]]]));
    m.collapse(6);
    const visible = m.visibleNodes();
    assert.ok(!visible.some((v) => v.node.elementId === 10));
    const parent = visible.find((v) => v.node.elementId === 6)!;
    assert.deepEqual(parent.badges, ["LOWER_BOUND"]);
    m.expand(6);
    assert.ok(m.visibleNodes().some((v) => v.node.elementId === 10));
});

test("violation filtering lists only flagged nodes", () => {
    const m = new DiagramModel();
    for (const line of LOG) m.applyEvent(evt(line));
    m.setViolations(new Map([[6, ["POTENCY_REQUIRED"]]]));
    assert.deepEqual(m.violatingNodes().map((n) => n.elementId), [6]);
});
