import { ServiceClient, ServiceError } from "./api.js";
import {
  canDerive,
  checkInputs,
  initialState,
  isValidNeuronRef,
  parseEpsilon,
  parseInputs,
  parseTheta,
  setInput,
  setInputsFromText,
  setNetwork,
  type ViewState,
} from "./state.js";
import type { NeuronRef } from "./types.js";

function message(err: unknown): string {
  if (err instanceof ServiceError) return err.message;
  if (err instanceof Error) return err.message;
  return String(err);
}

/**
 * Controller between the service client and the pure views. One request
 * in flight per user action: actions arriving while busy are dropped.
 */
export class InspectorApp {
  readonly state: ViewState = initialState();

  constructor(private readonly client: ServiceClient) {}

  private async guarded(action: () => Promise<void>): Promise<boolean> {
    if (this.state.busy) return false;
    this.state.busy = true;
    this.state.error = null;
    try {
      await action();
      return true;
    } catch (err) {
      this.state.error = message(err);
      return false;
    } finally {
      this.state.busy = false;
    }
  }

  load(): Promise<boolean> {
    return this.guarded(async () => {
      setNetwork(this.state, await this.client.getNetwork());
    });
  }

  selectFilter(layer: number, filter: number): void {
    if (layer in this.state.selectedFilter) {
      this.state.selectedFilter[layer] = filter;
    }
  }

  selectNeuron(ref: NeuronRef): Promise<boolean> {
    if (this.state.network !== null && !isValidNeuronRef(this.state.network, ref)) {
      this.state.error = `no neuron (${ref.layer}, ${ref.filter}, ${ref.neuron})`;
      return Promise.resolve(false);
    }
    return this.guarded(async () => {
      this.state.neuron = await this.client.getNeuron(
        ref.layer,
        ref.filter,
        ref.neuron,
      );
      this.state.selected = ref;
    });
  }

  editInput(index: number, text: string): void {
    setInput(this.state, index, text);
  }

  editVectorLine(text: string): void {
    setInputsFromText(this.state, text);
  }

  editTheta(text: string): void {
    this.state.thetaText = text;
  }

  editEpsilon(text: string): void {
    this.state.epsilonText = text;
  }

  submitInputs(): Promise<boolean> {
    const check = checkInputs(this.state);
    if (!check.ok) {
      this.state.error = check.reason;
      return Promise.resolve(false);
    }
    const vector = parseInputs(this.state);
    if (vector === null) return Promise.resolve(false);
    return this.guarded(async () => {
      this.state.trace = await this.client.setInputs(vector);
      // keep the detail panel in step with the new activations
      if (this.state.selected !== null) {
        this.state.neuron = await this.client.getNeuron(
          this.state.selected.layer,
          this.state.selected.filter,
          this.state.selected.neuron,
        );
      }
    });
  }

  /** Apply the current boxes, then derive; one user action end to end. */
  runDerive(): Promise<boolean> {
    if (!canDerive(this.state)) {
      this.state.error = checkInputs(this.state).reason ?? "invalid parameters";
      return Promise.resolve(false);
    }
    const vector = parseInputs(this.state);
    const theta = parseTheta(this.state);
    const epsilon = parseEpsilon(this.state);
    if (vector === null || theta === null || epsilon === null) {
      return Promise.resolve(false);
    }
    return this.guarded(async () => {
      this.state.trace = await this.client.setInputs(vector);
      const res = await this.client.derive({ theta, epsilon });
      this.state.tree = res.tree;
      this.state.path = res.path;
    });
  }
}
