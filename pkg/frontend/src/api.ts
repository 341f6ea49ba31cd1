import type {
  DeriveParams,
  DeriveResponse,
  NetworkSummary,
  NeuronDetail,
  TraceSummary,
  TreeDoc,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Non-2xx service answer; message is the body's "error" field. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export class ServiceClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly base: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    let body: unknown = null;
    try {
      body = await res.json();
    } catch {
      // fall through; non-JSON bodies only occur on transport errors
    }
    if (!res.ok) {
      const msg =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `service answered ${res.status}`;
      throw new ServiceError(res.status, msg);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getNetwork(): Promise<NetworkSummary> {
    return this.request("/network");
  }

  getNeuron(layer: number, filter: number, neuron: number): Promise<NeuronDetail> {
    return this.request(`/neuron/${layer}/${filter}/${neuron}`);
  }

  setInputs(vector: number[]): Promise<TraceSummary> {
    return this.post("/inputs", { vector });
  }

  derive(params: DeriveParams): Promise<DeriveResponse> {
    return this.post("/derive", params);
  }

  getTree(): Promise<TreeDoc> {
    return this.request("/tree");
  }
}
