import type { FetchLike } from "../src/api.js";
import type { TreeNode } from "../src/types.js";

interface Route {
  status: number;
  body: unknown;
}

interface Call {
  method: string;
  path: string;
  body?: unknown;
}

/** Replays captured service fixtures; records every request it sees. */
export class FakeService {
  readonly calls: Call[] = [];
  private readonly routes = new Map<string, Route>();
  private gate: Promise<void> | null = null;
  private open: (() => void) | null = null;

  on(method: string, path: string, body: unknown, status = 200): this {
    this.routes.set(`${method.toUpperCase()} ${path}`, { status, body });
    return this;
  }

  /** Park every request on a gate until release() (in-flight tests). */
  hold(): void {
    this.gate = new Promise((resolve) => {
      this.open = resolve;
    });
  }

  release(): void {
    this.open?.();
    this.gate = null;
    this.open = null;
  }

  callsTo(method: string, path: string): Call[] {
    return this.calls.filter((c) => c.method === method && c.path === path);
  }

  readonly fetch: FetchLike = async (url, init) => {
    const method = (init?.method ?? "GET").toUpperCase();
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const call: Call = { method, path };
    if (init?.body !== undefined) call.body = JSON.parse(String(init.body));
    this.calls.push(call);
    if (this.gate !== null) await this.gate;
    const route = this.routes.get(`${method} ${path}`);
    if (route === undefined) {
      return jsonResponse({ error: `no fixture for ${method} ${path}` }, 404);
    }
    return jsonResponse(route.body, route.status);
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** Leaf records in a tree document: terminal children plus inline leaves. */
export function docLeafCount(node: TreeNode): number {
  let count = node.leaf !== undefined ? 1 : 0;
  for (const child of node.children) {
    if (child.leaf !== undefined) count += 1;
    else if (child.node !== undefined) count += docLeafCount(child.node);
  }
  return count;
}

/** Every number anywhere in a JSON payload, as its display string. */
export function payloadNumberStrings(value: unknown, into = new Set<string>()): Set<string> {
  if (typeof value === "number") {
    into.add(String(value));
  } else if (Array.isArray(value)) {
    for (const item of value) payloadNumberStrings(item, into);
  } else if (value !== null && typeof value === "object") {
    for (const item of Object.values(value)) payloadNumberStrings(item, into);
  }
  return into;
}
