/** Browser bootstrap: bind the controller to the page. */

import { ConsoleController } from "./controller.js";
import { render, renderCategoryButtons, type RenderTargets } from "./render.js";

function requireEl(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const teacherId = params.get("teacher") ?? "t01";
  const baseUrl = params.get("api") ?? "http://127.0.0.1:8000";

  const targets: RenderTargets = {
    connection: requireEl("connection"),
    card: requireEl("card"),
    categories: requireEl("categories"),
    badges: requireEl("badges"),
    alignmentGraph: requireEl("alignment-graph"),
    kpiGraph: requireEl("kpi-graph"),
    homeStatus: requireEl("home-status"),
  };
  requireEl("teacher-label").textContent = teacherId;

  const controller = new ConsoleController({ baseUrl, teacherId });
  let selectedCategory: string | null = null;

  const paint = () => {
    const state = controller.store.get();
    render(state, targets);
    renderCategoryButtons(
      controller.taxonomy().categories,
      selectedCategory,
      targets.categories,
      state.card !== null,
    );
  };

  controller.store.subscribe(paint);

  // Tap one: pick the behavior. Tap two: confirm. That is the whole flow.
  targets.categories.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.code) {
      selectedCategory = target.dataset.code;
      paint();
    } else if (target.dataset.confirm && selectedCategory) {
      const code = selectedCategory;
      selectedCategory = null;
      void controller.submitAppraisal(code);
      paint();
    }
  });

  window.addEventListener("online", () => void controller.flushPending());

  await controller.start();
  paint();
}

void boot();
