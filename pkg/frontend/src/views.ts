import { canDerive, checkInputs, type ViewState } from "./state.js";
import type {
  ConfigEntry,
  InEdge,
  NetworkSummary,
  NeuronDetail,
  NeuronRef,
  OutEdge,
  TreeChild,
  TreeDoc,
  TreeLeaf,
  TreeNode,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Numbers are echoed verbatim; the UI never computes its own values. */
function fmt(value: number | null | undefined): string {
  return value === null || value === undefined ? "n/a" : String(value);
}

function ref(coords: number[] | NeuronRef): string {
  if (Array.isArray(coords)) return `(${coords.join(", ")})`;
  return `(${coords.layer}, ${coords.filter}, ${coords.neuron})`;
}

// ---- overview panel ---------------------------------------------------

function neuronButtons(layer: number, filter: number, count: number): string {
  const buttons: string[] = [];
  for (let n = 0; n < count; n++) {
    buttons.push(
      `<button type="button" class="neuron" data-select="${layer},${filter},${n}">` +
        `${n}</button>`,
    );
  }
  return buttons.join("");
}

export function renderOverview(state: ViewState): string {
  const net = state.network;
  if (net === null) return `<p class="placeholder">loading network...</p>`;
  const rows: string[] = [
    `<h2>${escapeHtml(net.name)}</h2>`,
    `<p>inputs: ${net.input_width} · outputs: ` +
      `${net.output_labels.map(escapeHtml).join(", ")}</p>`,
  ];
  for (const layer of net.layers) {
    const head =
      `<span class="layer-head">layer ${layer.index} · ` +
      `${escapeHtml(layer.kind)} · width ${layer.width}</span>`;
    if (layer.filter_count === undefined || layer.neuron_counts === undefined) {
      rows.push(`<div class="layer">${head} <em>pass-through</em></div>`);
      continue;
    }
    const selected = state.selectedFilter[layer.index] ?? 0;
    const options = layer.neuron_counts
      .map(
        (count, f) =>
          `<option value="${f}"${f === selected ? " selected" : ""}>` +
          `filter ${f} (${count})</option>`,
      )
      .join("");
    const picker =
      layer.filter_count > 1
        ? `<select data-filter-layer="${layer.index}">${options}</select>`
        : "";
    const count = layer.neuron_counts[selected] ?? 0;
    rows.push(
      `<div class="layer">${head} ${picker}` +
        `<div class="buttons">${neuronButtons(layer.index, selected, count)}</div>` +
        `</div>`,
    );
  }
  return rows.join("\n");
}

// ---- information panel ------------------------------------------------

function inEdgeRows(edges: InEdge[]): string {
  return edges
    .map(
      (e) =>
        `<tr><td>${e.source ? ref(e.source) : `flat ${e.source_flat}`}</td>` +
        `<td>${fmt(e.weight)}</td><td>${fmt(e.activation_value)}</td></tr>`,
    )
    .join("");
}

function outEdgeRows(edges: OutEdge[]): string {
  return edges
    .map(
      (e) =>
        `<tr><td>${e.target ? ref(e.target) : `flat ${e.target_flat}`}</td>` +
        `<td>layer ${e.layer}</td><td>${fmt(e.weight)}</td></tr>`,
    )
    .join("");
}

export function renderNeuron(detail: NeuronDetail | null): string {
  if (detail === null) return `<p class="placeholder">select a neuron</p>`;
  const parts = [
    `<h2>neuron ${ref(detail.id)}</h2>`,
    `<table class="facts">`,
    `<tr><th>activation</th><td>${escapeHtml(detail.activation)}</td></tr>`,
    `<tr><th>input function</th><td>${escapeHtml(detail.input_function)}</td></tr>`,
    `<tr><th>bias</th><td>${fmt(detail.bias)}</td></tr>`,
    `<tr><th>net</th><td>${fmt(detail.net)}</td></tr>`,
    `<tr><th>output</th><td>${fmt(detail.output)}</td></tr>`,
    `<tr><th>output range</th><td>[${fmt(detail.output_min)}, ` +
      `${fmt(detail.output_max)}]</td></tr>`,
    `<tr><th>avg input activation</th>` +
      `<td>${fmt(detail.average_input_activation)}</td></tr>`,
    `<tr><th>avg weight</th><td>${fmt(detail.average_weight)}</td></tr>`,
    `</table>`,
  ];
  if (detail.in_edges.length > 0) {
    parts.push(
      `<h3>predecessors</h3>`,
      `<table class="edges"><tr><th>source</th><th>weight</th>` +
        `<th>activation</th></tr>${inEdgeRows(detail.in_edges)}</table>`,
    );
  } else {
    parts.push(`<p>no predecessors (input neuron)</p>`);
  }
  if (detail.out_edges.length > 0) {
    parts.push(
      `<h3>successors</h3>`,
      `<table class="edges"><tr><th>target</th><th>layer</th>` +
        `<th>weight</th></tr>${outEdgeRows(detail.out_edges)}</table>`,
    );
  } else {
    parts.push(`<p>no successors (output neuron)</p>`);
  }
  return parts.join("\n");
}

// ---- operation controls ------------------------------------------------

export function renderControls(state: ViewState): string {
  const boxes = state.inputs
    .map(
      (text, i) =>
        `<label>input ${i} <input data-input="${i}" ` +
        `value="${escapeHtml(text)}"></label>`,
    )
    .join("\n");
  const check = checkInputs(state);
  const disabled = canDerive(state) ? "" : " disabled";
  const parts = [
    `<div class="inputs">${boxes}</div>`,
    `<label>vector <input id="vector-line" placeholder="comma separated"></label>`,
    `<button type="button" id="submit-inputs"${check.ok ? "" : " disabled"}>` +
      `apply inputs</button>`,
    `<label>theta <input id="theta" value="${escapeHtml(state.thetaText)}"></label>`,
    `<label>epsilon <input id="epsilon" ` +
      `value="${escapeHtml(state.epsilonText)}"></label>`,
    `<button type="button" id="derive"${disabled}>derive</button>`,
  ];
  if (state.busy) parts.push(`<span class="busy">working...</span>`);
  if (!check.ok && check.reason !== null) {
    parts.push(`<p class="hint">${escapeHtml(check.reason)}</p>`);
  }
  if (state.error !== null) {
    parts.push(`<p class="error">${escapeHtml(state.error)}</p>`);
  }
  if (state.trace !== null) {
    const outs = state.trace.outputs.map((v) => fmt(v)).join(", ");
    parts.push(
      `<p class="decision">decision: <b>${escapeHtml(state.trace.decision)}</b>` +
        ` (index ${state.trace.decision_index})</p>`,
      `<p class="outputs">outputs: [${outs}]</p>`,
    );
  }
  return parts.join("\n");
}

// ---- decision tree outline ----------------------------------------------

function configLabel(doc: TreeDoc, id: number): string {
  const entries: ConfigEntry[] = doc.config_sets[String(id)] ?? [];
  if (entries.length === 0) return "{}";
  const inner = entries
    .map((e) => `${escapeHtml(e.role)}=${escapeHtml(e.filler)}`)
    .join(", ");
  return `{${inner}}`;
}

function leafItem(leaf: TreeLeaf): string {
  return (
    `<li class="leaf">decision <b>${escapeHtml(leaf.decision)}</b>` +
    ` · support ${fmt(leaf.support)}</li>`
  );
}

function childItem(doc: TreeDoc, child: TreeChild): string {
  const label =
    `neuron ${ref(child.label.neuron)} ` +
    `${configLabel(doc, child.label.config_set)}`;
  if (child.leaf !== undefined) {
    return `<li><span class="branch">${label}</span><ul>` +
      `${leafItem(child.leaf)}</ul></li>`;
  }
  if (child.node !== undefined) {
    return (
      `<li><details open><summary>${label}</summary>` +
      `${nodeList(doc, child.node)}</details></li>`
    );
  }
  return `<li><span class="branch">${label}</span></li>`;
}

function nodeList(doc: TreeDoc, node: TreeNode): string {
  const items = node.children.map((child) => childItem(doc, child));
  if (node.leaf !== undefined) items.push(leafItem(node.leaf));
  return `<ul>${items.join("")}</ul>`;
}

export function renderTree(tree: TreeDoc | null): string {
  if (tree === null) return `<p class="placeholder">no tree derived yet</p>`;
  const head =
    `<p class="meta">network ${escapeHtml(tree.network_name)} · ` +
    `theta ${fmt(tree.theta)} · epsilon ${fmt(tree.epsilon)} · ` +
    `scope ${escapeHtml(tree.scope)} · mode ${escapeHtml(tree.relevance_mode)}` +
    `${tree.rho !== undefined ? ` · rho ${fmt(tree.rho)}` : ""}</p>` +
    `<p class="hash">network hash ${escapeHtml(tree.network_hash)}</p>`;
  return `${head}\n${nodeList(tree, tree.root)}`;
}

/** Leaf rows in a rendered outline; tests compare this to the document. */
export function countRenderedLeaves(html: string): number {
  return (html.match(/class="leaf"/g) ?? []).length;
}

export function renderApp(state: ViewState): {
  overview: string;
  neuron: string;
  controls: string;
  tree: string;
} {
  return {
    overview: renderOverview(state),
    neuron: renderNeuron(state.neuron),
    controls: renderControls(state),
    tree: renderTree(state.tree),
  };
}

export function summaryLine(net: NetworkSummary): string {
  const widths = net.layers.map((l) => l.width).join("-");
  return `${net.name}: ${widths}`;
}
