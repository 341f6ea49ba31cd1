import type {
  NetworkSummary,
  NeuronDetail,
  NeuronRef,
  PathDoc,
  TraceSummary,
  TreeDoc,
} from "./types.js";

/** Everything the panels render. Views are pure functions of this. */
export interface ViewState {
  network: NetworkSummary | null;
  selectedFilter: Record<number, number>;
  selected: NeuronRef | null;
  neuron: NeuronDetail | null;
  inputs: string[];
  trace: TraceSummary | null;
  thetaText: string;
  epsilonText: string;
  tree: TreeDoc | null;
  path: PathDoc | null;
  error: string | null;
  busy: boolean;
}

export function initialState(): ViewState {
  return {
    network: null,
    selectedFilter: {},
    selected: null,
    neuron: null,
    inputs: [],
    trace: null,
    thetaText: "0.5",
    epsilonText: "0",
    tree: null,
    path: null,
    error: null,
    busy: false,
  };
}

export function setNetwork(state: ViewState, net: NetworkSummary): void {
  state.network = net;
  state.selectedFilter = {};
  for (const layer of net.layers) {
    if (layer.filter_count !== undefined) state.selectedFilter[layer.index] = 0;
  }
  state.inputs = new Array<string>(net.input_width).fill("");
}

export function setInput(state: ViewState, index: number, text: string): void {
  if (index >= 0 && index < state.inputs.length) state.inputs[index] = text;
}

/** Replace all boxes from one comma/space separated line (may change length). */
export function setInputsFromText(state: ViewState, text: string): void {
  const parts = text.split(/[,\s]+/).filter((p) => p.length > 0);
  state.inputs = parts;
}

function parseNumber(text: string): number | null {
  const trimmed = text.trim();
  if (trimmed === "") return null;
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : null;
}

/** The vector to submit, or null while any box is unparseable. */
export function parseInputs(state: ViewState): number[] | null {
  const out: number[] = [];
  for (const text of state.inputs) {
    const value = parseNumber(text);
    if (value === null) return null;
    out.push(value);
  }
  return out;
}

export function parseTheta(state: ViewState): number | null {
  return parseNumber(state.thetaText);
}

export function parseEpsilon(state: ViewState): number | null {
  return parseNumber(state.epsilonText);
}

export interface InputsCheck {
  ok: boolean;
  reason: string | null;
}

/** Wrong length or unparseable boxes disable derivation and say why. */
export function checkInputs(state: ViewState): InputsCheck {
  if (state.network === null) return { ok: false, reason: "no network loaded" };
  const width = state.network.input_width;
  if (state.inputs.length !== width) {
    return {
      ok: false,
      reason: `expected ${width} inputs, got ${state.inputs.length}`,
    };
  }
  if (parseInputs(state) === null) {
    return { ok: false, reason: "every input box needs a number" };
  }
  return { ok: true, reason: null };
}

export function canDerive(state: ViewState): boolean {
  return (
    !state.busy &&
    checkInputs(state).ok &&
    parseTheta(state) !== null &&
    parseEpsilon(state) !== null
  );
}

/** Valid against the overview summary, per the view-state invariant. */
export function isValidNeuronRef(net: NetworkSummary, ref: NeuronRef): boolean {
  const layer = net.layers.find((l) => l.index === ref.layer);
  if (layer === undefined || layer.neuron_counts === undefined) return false;
  const count = layer.neuron_counts[ref.filter];
  return count !== undefined && ref.neuron >= 0 && ref.neuron < count;
}
