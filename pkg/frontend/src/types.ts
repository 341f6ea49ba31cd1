/** Service payload shapes, mirrored field-for-field from the HTTP API. */

export interface LayerSummary {
  index: number;
  kind: string;
  width: number;
  // absent on flatten layers, which have no addressable neurons
  activation?: string;
  input_function?: string;
  filter_count?: number;
  neuron_counts?: number[];
}

export interface NetworkSummary {
  name: string;
  input_width: number;
  output_labels: string[];
  layers: LayerSummary[];
}

export interface InEdge {
  layer: number;
  source: number[] | null;
  source_flat: number;
  weight: number;
  activation_value: number;
}

export interface OutEdge {
  layer: number;
  target: number[] | null;
  target_flat: number;
  weight: number;
}

export interface NeuronDetail {
  id: number[];
  flat: number;
  bias: number;
  activation: string;
  input_function: string;
  in_edges: InEdge[];
  out_edges: OutEdge[];
  net: number;
  output: number;
  output_min: number;
  output_max: number;
  average_input_activation: number | null;
  average_weight: number | null;
}

export interface TraceSummary {
  input: number[];
  decision_index: number;
  decision: string;
  outputs: number[];
  output_labels: string[];
  values: number[][];
}

export interface NeuronRef {
  layer: number;
  filter: number;
  neuron: number;
}

export interface ConfigEntry {
  filler: string;
  role: string;
}

export interface TreeLeaf {
  decision: string;
  support: number;
}

export interface TreeChildLabel {
  neuron: NeuronRef;
  config_set: number;
}

export interface TreeChild {
  label: TreeChildLabel;
  node?: TreeNode;
  leaf?: TreeLeaf;
}

export interface TreeNode {
  test: NeuronRef | null;
  children: TreeChild[];
  leaf?: TreeLeaf;
}

export interface TreeDoc {
  network_name: string;
  network_hash: string;
  theta: number;
  epsilon: number;
  scope: string;
  relevance_mode: string;
  rho?: number;
  config_sets: Record<string, ConfigEntry[]>;
  root: TreeNode;
}

export interface PathEdgeDoc {
  neuron: NeuronRef;
  configs: ConfigEntry[];
  sub?: PathEdgeDoc[];
}

export interface PathDoc {
  decision: string;
  input: number[];
  edges: PathEdgeDoc[];
}

export interface DeriveResponse {
  path: PathDoc;
  tree: TreeDoc;
}

export interface DeriveParams {
  theta: number;
  epsilon: number;
  scope?: string;
  mode?: string;
  rho?: number;
}
