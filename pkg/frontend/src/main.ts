import { WizardApi } from "./api.js";
import { renderState } from "./render.js";
import { WizardController } from "./wizard.js";

const SESSION_KEY = "wizard_session_id";

function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.location.origin;
}

async function boot(root: HTMLElement): Promise<void> {
  const controller = new WizardController(new WizardApi(baseUrl()));

  const draw = () => {
    root.innerHTML = renderState(controller.state, controller.contextGapRecorded());
  };

  const storedSession = sessionStorage.getItem(SESSION_KEY);
  if (storedSession) {
    await controller.rehydrate(storedSession);
    if (controller.state.status === "error") {
      sessionStorage.removeItem(SESSION_KEY);
      await controller.start();
    }
  } else {
    await controller.start();
  }
  if (controller.state.sessionId) {
    sessionStorage.setItem(SESSION_KEY, controller.state.sessionId);
  }
  draw();

  root.addEventListener("change", (event) => {
    const target = event.target as HTMLElement;
    const option = target.getAttribute("data-option");
    if (option) {
      controller.toggleOption(Number(option));
      draw();
    }
  });

  root.addEventListener("click", async (event) => {
    const target = (event.target as HTMLElement).closest("[data-action]");
    if (!target) {
      return;
    }
    const action = target.getAttribute("data-action");
    if (action === "submit" && controller.canSubmit()) {
      await controller.submitSelection();
    } else if (action === "undo" && controller.state.breadcrumb.length > 0) {
      await controller.undo();
    } else if (action === "retry") {
      await controller.start();
    } else {
      return;
    }
    draw();
  });
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    void boot(root);
  }
}
