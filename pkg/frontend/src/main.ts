import { ServiceClient } from "./api.js";
import { InspectorApp } from "./app.js";
import { renderApp } from "./views.js";

const DEFAULT_BASE = "http://127.0.0.1:8753";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? DEFAULT_BASE;
}

function panel(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing panel #${id}`);
  return el;
}

function start(): void {
  const app = new InspectorApp(new ServiceClient(apiBase()));
  const overview = panel("overview");
  const neuron = panel("neuron");
  const controls = panel("controls");
  const tree = panel("tree");

  const paint = (): void => {
    const html = renderApp(app.state);
    overview.innerHTML = html.overview;
    neuron.innerHTML = html.neuron;
    controls.innerHTML = html.controls;
    tree.innerHTML = html.tree;
  };

  const repaint = (work: Promise<boolean>): void => {
    paint();
    void work.then(paint);
  };

  document.body.addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const select = target.dataset["select"];
    if (select !== undefined) {
      const [layer = 0, filter = 0, n = 0] = select.split(",").map(Number);
      repaint(app.selectNeuron({ layer, filter, neuron: n }));
      return;
    }
    if (target.id === "submit-inputs") repaint(app.submitInputs());
    if (target.id === "derive") repaint(app.runDerive());
  });

  document.body.addEventListener("change", (ev) => {
    const target = ev.target as HTMLInputElement | HTMLSelectElement;
    const filterLayer = target.dataset["filter-layer"] ?? target.getAttribute("data-filter-layer");
    if (filterLayer !== null && filterLayer !== undefined) {
      app.selectFilter(Number(filterLayer), Number(target.value));
      paint();
      return;
    }
    const inputIndex = target.getAttribute("data-input");
    if (inputIndex !== null) {
      app.editInput(Number(inputIndex), target.value);
      paint();
      return;
    }
    if (target.id === "vector-line") {
      app.editVectorLine(target.value);
      paint();
    }
    if (target.id === "theta") {
      app.editTheta(target.value);
      paint();
    }
    if (target.id === "epsilon") {
      app.editEpsilon(target.value);
      paint();
    }
  });

  repaint(app.load());
}

start();
