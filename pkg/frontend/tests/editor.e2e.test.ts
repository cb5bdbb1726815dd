// End-to-end: a scripted editing session against a real runtime spawned as
// `qmod serve --socket`, with every outbound byte recorded by a proxy.
//
// Covers the two acceptance properties of the editor:
//  - zero-authority: the editor-to-runtime stream is exclusively
//    grammar-valid protocol commands, and the event-sourced diagram equals
//    a cold reload of the same store;
//  - palette validity: enabled palette entries create successfully,
//    disabled ones are refused with CONTAINMENT_FORBIDDEN when forced.

import assert from "node:assert/strict";
import { spawn, ChildProcess } from "node:child_process";
import { after, before, test } from "node:test";

import { ProtocolClient } from "../src/client.js";
import { RecordingProxy } from "../src/connection.js";
import { TcpConnection } from "../src/tcp.js";
import { Editor } from "../src/editor.js";
import { DiagramModel } from "../src/model.js";
import { command, isValidCommandLine, parseServerLine, quote } from "../src/protocol.js";

const PORT = 47611;
let server: ChildProcess;

function sleep(ms: number): Promise<void> {
    return new Promise((r) => setTimeout(r, ms));
}

async function openSession(): Promise<TcpConnection> {
    for (let attempt = 0; attempt < 100; attempt += 1) {
        const conn = await TcpConnection.connect("127.0.0.1", PORT).catch(() => null);
        if (!conn) {
            await sleep(100);
            continue;
        }
        const first = await new Promise<string>((resolve) => {
            let done = false;
            conn.onLine((l) => { if (!done) { done = true; resolve(l); } });
            conn.send("LIST RootFolder");
            setTimeout(() => { if (!done) { done = true; resolve("timeout"); } }, 2000);
        });
        if (first.includes("BUSY") || first === "timeout") {
            conn.close();
            await sleep(100);
            continue;
        }
        return conn;
    }
    throw new Error("could not open a session");
}

before(async () => {
    server = spawn("python3", ["-m", "qmod.cli", "serve", "--socket", `127.0.0.1:${PORT}`],
        { stdio: ["ignore", "ignore", "pipe"] });
});

after(() => {
    server.kill();
});

/** Fresh-store snapshot: the RootFolder and the two reserved region folders. */
function freshStoreModel(): DiagramModel {
    const m = new DiagramModel();
    m.upsertNode({ elementId: 1, kindBadge: "RootFolder", name: "root", typeText: null, classRef: 0, parentId: 0 });
    m.upsertNode({ elementId: 2, kindBadge: "Namespace", name: "M2", typeText: null, classRef: 0, parentId: 1 });
    m.upsertNode({ elementId: 3, kindBadge: "Namespace", name: "M1", typeText: null, classRef: 0, parentId: 1 });
    return m;
}

test("scripted editing session: zero-authority, refresh equivalence, palette validity", async () => {
    const proxy = new RecordingProxy(await openSession());
    const client = new ProtocolClient(proxy);
    const editor = new Editor(client);
    await editor.connect();

    // -- build a meta-model through gestures -------------------------------------
    const ns = (await editor.createElement("Namespace", 2, "signals")).newId;
    assert.ok(ns > 3);
    const real = (await editor.createElement("DataType", ns, "real",
        [{ field: "base", index: 0, token: "REAL" }])).newId;
    const volt = (await editor.createElement("Unit", ns, "volt", [
        { field: "symbol", index: 0, token: quote("V") },
        { field: "dims", index: 0, token: "1" },
        { field: "dims", index: 1, token: "2" },
        { field: "dims", index: 2, token: "-3" },
        { field: "dims", index: 3, token: "-1" },
    ])).newId;
    const signal = (await editor.createElement("Class", ns, "Signal",
        [{ field: "type", index: 0, token: quote("sig") }])).newId;
    const voltage = (await editor.createElement("Attribute", signal, "voltage", [
        { field: "datatype", index: 0, token: String(real) },
        { field: "unit", index: 0, token: String(volt) },
    ])).newId;
    assert.ok(voltage > signal);
    const power = (await editor.createElement("Class", ns, "Power",
        [{ field: "type", index: 0, token: quote("pow") }])).newId;
    const inh = (await editor.createElement("Inheritance", ns, "p_is_s", [
        { field: "enda", index: 0, token: String(power) },
        { field: "endb", index: 0, token: String(signal) },
    ])).newId;
    assert.ok(inh > 0);
    const untyped = (await editor.createElement("Class", ns, "Untyped")).newId;
    const abstract_ = (await editor.createElement("Class", ns, "Abs",
        [{ field: "abstract", index: 0, token: "true" }])).newId;
    const holds = (await editor.createElement("Composition", ns, "holds", [
        { field: "enda", index: 0, token: String(signal) },
        { field: "endb", index: 0, token: String(signal) },
    ])).newId;
    assert.ok(holds > 0);
    const peer = (await editor.createElement("Association", ns, "peer", [
        { field: "enda", index: 0, token: String(signal) },
        { field: "endb", index: 0, token: String(signal) },
    ])).newId;

    // -- edit instances -------------------------------------------------------------
    const s1 = (await editor.instantiate(signal, 3, "s1",
        [{ field: "voltage", index: 0, token: "3.3" }])).newId;
    const s2 = (await editor.instantiate(signal, 3, "s2",
        [{ field: "voltage", index: 0, token: "1.5" }])).newId;
    const link = (await editor.drawLink(3, "l1", peer, s1, s2)).newId;
    assert.ok(link > 0);
    const child = (await editor.instantiate(signal, s1, "part",
        [{ field: "voltage", index: 0, token: "0.5" }])).newId;
    assert.ok((await editor.rename(s2, "s2renamed")).ok);
    assert.ok((await editor.setValue(s1, "voltage", 0, "4.0")).ok);
    assert.ok((await editor.retype(s2, power)).ok);
    assert.ok((await editor.deleteElement(child)).ok);

    // -- refused gestures keep the model untouched and surface the catalogue code ----
    await editor.settle();
    const before = editor.model.contentHash();
    const refusedAbstract = await editor.instantiate(abstract_, 3, "a1");
    assert.equal(refusedAbstract.error, "ABSTRACT_CLASS");
    const refusedCommit = await editor.instantiate(untyped, 3, "u1");
    assert.equal(refusedCommit.error, "VALIDATION_FAILED");
    assert.match(refusedCommit.detail, /POTENCY_REQUIRED/);
    const refusedContainment = await editor.createElement("Attribute", ns, "stray");
    assert.equal(refusedContainment.error, "CONTAINMENT_FORBIDDEN");
    await editor.settle();
    assert.equal(editor.model.contentHash(), before);
    assert.ok(editor.toasts.some((t) => t.startsWith("ABSTRACT_CLASS")));
    assert.ok(editor.toasts.some((t) => t.startsWith("VALIDATION_FAILED")));

    // -- draft mode: violations are badged live from CHECK ----------------------------
    await editor.beginDraft();
    const draft = await editor.draftInstantiate(untyped, 3, "draft1");
    const violations = await editor.highlightViolations();
    assert.ok(violations.some((v) => v.elementId === draft && v.code === "POTENCY_REQUIRED"));
    assert.ok(editor.model.nodes.get(draft)!.violationFlags.includes("POTENCY_REQUIRED"));
    assert.deepEqual(editor.model.violatingNodes().map((n) => n.elementId), [draft]);
    await editor.rollbackDraft();
    assert.equal(editor.model.contentHash(), before);
    const clean = await editor.highlightViolations();
    assert.deepEqual(clean, []);
    assert.deepEqual(editor.model.violatingNodes(), []);

    // -- collapse: badges bubble to the collapsed ancestor -----------------------------
    const part2 = (await editor.instantiate(signal, s1, "part2",
        [{ field: "voltage", index: 0, token: "0.25" }])).newId;
    await editor.settle();
    editor.model.setViolations(new Map([[part2, ["VALUE_OUT_OF_RANGE"]]]));
    editor.model.collapse(s1);
    const visible = editor.model.visibleNodes();
    assert.ok(!visible.some((v) => v.node.elementId === part2));
    assert.deepEqual(visible.find((v) => v.node.elementId === s1)!.badges, ["VALUE_OUT_OF_RANGE"]);
    editor.model.expand(s1);
    editor.model.setViolations(new Map());

    // -- palette validity over 20 pseudo-random selections ------------------------------
    let lcg = 20260808;
    const next = () => (lcg = (lcg * 1103515245 + 12345) % 2147483648);
    const ids = [1, 2, 3, ns, real, volt, signal, voltage, power, untyped, abstract_, holds, peer, s1, s2];
    let forcedChecks = 0;
    for (let pick = 0; pick < 20; pick += 1) {
        const selection = ids[next() % ids.length];
        const palette = await editor.paletteFor(selection);
        for (const entry of palette) {
            await client.expectOk(command("BEGIN"));
            const line = entry.kind === "Instance"
                ? command("INSTANTIATE", entry.classId, selection, quote(`pal${pick}_${entry.kind}_${entry.classId}`))
                : command("CREATE", entry.kind, selection, quote(`pal${pick}_${entry.kind}`));
            const r = await client.request(line);
            if (entry.enabled) {
                assert.ok(r.ok, `enabled ${entry.kind} under ${selection}: ${r.code}`);
            } else {
                assert.equal(r.code, "CONTAINMENT_FORBIDDEN",
                    `disabled ${entry.kind} under ${selection} -> ${r.code || "OK"}`);
            }
            forcedChecks += 1;
            await client.request(command("ROLLBACK"));
        }
    }
    assert.ok(forcedChecks >= 20 * 10);

    // -- zero-authority: the recorded stream is pure protocol ----------------------------
    assert.ok(proxy.sent.length > 100);
    for (const line of proxy.sent) {
        assert.ok(isValidCommandLine(line), `non-protocol byte stream: ${JSON.stringify(line)}`);
    }

    // -- event replay: the recorded event log rebuilds the same content ------------------
    const replay = freshStoreModel();
    for (const line of proxy.received) {
        const parsed = parseServerLine(line);
        if (parsed.kind === "event") replay.applyEvent(parsed.event);
    }
    await editor.settle();
    assert.equal(replay.contentHash(), editor.model.contentHash());

    // -- refresh equivalence: cold reload on a fresh session matches -----------------------
    const eventSourced = editor.model.contentHash();
    client.close();
    await sleep(50);
    const coldClient = new ProtocolClient(await openSession());
    const cold = new DiagramModel();
    await cold.coldLoad(coldClient);
    assert.equal(cold.contentHash(), eventSourced);
    coldClient.close();
});
