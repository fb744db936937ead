import { ApiClient } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { LabelQueue } from "./queue.js";
import { ReviewFlow, actionForKey, renderPairCard } from "./review.js";
import type { Label } from "./types.js";

const POLL_MS = 2000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const app = el<HTMLDivElement>("app");
  app.innerHTML = `
    <header>
      <h1>linkforge review</h1>
      <nav>
        <button id="tab-review" class="active">review pairs</button>
        <button id="tab-configs">configurations</button>
      </nav>
      <div id="progress"><div id="progress-bar"></div><span id="progress-text"></span></div>
    </header>
    <div id="banner" hidden></div>
    <main>
      <section id="view-review"><div id="card"></div></section>
      <section id="view-configs" hidden>
        <canvas id="scatter" width="860" height="560"></canvas>
        <div id="config-info"></div>
      </section>
    </main>
    <footer id="status"></footer>`;

  const api = new ApiClient();
  const annotator = new URLSearchParams(location.search).get("annotator") ?? "reviewer";
  const queue = new LabelQueue(
    (item) => api.postLabel(item.pairId, item.label, item.annotator),
    window.localStorage,
  );
  const flow = new ReviewFlow(api, queue, annotator);
  const banner = el<HTMLDivElement>("banner");
  const status = el<HTMLElement>("status");

  queue.onChange = (depth) => {
    if (depth > 0) {
      banner.hidden = false;
      banner.textContent =
        `${depth} label${depth > 1 ? "s" : ""} not yet saved - retrying automatically`;
    } else {
      banner.hidden = true;
    }
  };
  // labels queued from a previous visit flush on reconnect
  void queue.flush();
  setInterval(() => void queue.flush(), POLL_MS);

  const card = el<HTMLDivElement>("card");
  const renderCard = () => {
    const pair = flow.current();
    card.innerHTML = pair
      ? renderPairCard(pair)
      : `<p class="done">${flow.exhausted
          ? "No unlabeled pairs left - switch to the configurations tab."
          : "Loading pairs…"}</p>`;
    card.querySelectorAll<HTMLButtonElement>("button[data-label]").forEach((btn) => {
      btn.addEventListener("click", () => {
        const value = btn.dataset.label;
        void (value === "undo"
          ? flow.handle({ kind: "undo" })
          : flow.handle({ kind: "label", label: value as Label })
        ).then(renderCard);
      });
    });
  };

  const refreshProgress = async () => {
    try {
      const info = await api.getSession();
      el<HTMLDivElement>("progress-bar").style.width =
        `${Math.round(info.progress * 100)}%`;
      el<HTMLSpanElement>("progress-text").textContent =
        `${info.labeled}/${info.n_pairs} labeled` +
        (info.selected_config_id !== null
          ? ` - config #${info.selected_config_id} selected`
          : "");
    } catch {
      /* banner already reports connectivity trouble */
    }
  };

  const dashboard = new Dashboard(api, el<HTMLCanvasElement>("scatter"),
                                  el<HTMLDivElement>("config-info"));
  dashboard.onStatus = (msg) => { status.textContent = msg; };

  const viewReview = el<HTMLElement>("view-review");
  const viewConfigs = el<HTMLElement>("view-configs");
  const tabReview = el<HTMLButtonElement>("tab-review");
  const tabConfigs = el<HTMLButtonElement>("tab-configs");
  let activeTab: "review" | "configs" = "review";
  const setTab = (tab: "review" | "configs") => {
    activeTab = tab;
    viewReview.hidden = tab !== "review";
    viewConfigs.hidden = tab !== "configs";
    tabReview.classList.toggle("active", tab === "review");
    tabConfigs.classList.toggle("active", tab === "configs");
    if (tab === "configs") void dashboard.refresh();
  };
  tabReview.addEventListener("click", () => setTab("review"));
  tabConfigs.addEventListener("click", () => setTab("configs"));

  document.addEventListener("keydown", (ev) => {
    if (activeTab !== "review" || ev.ctrlKey || ev.metaKey || ev.altKey) return;
    const action = actionForKey(ev.key);
    if (action) {
      ev.preventDefault();
      void flow.handle(action).then(renderCard);
    }
  });

  await flow.ensureLoaded();
  renderCard();
  await refreshProgress();
  setInterval(() => {
    void refreshProgress();
    if (activeTab === "configs") void dashboard.refresh();
  }, POLL_MS);
}

void boot();
