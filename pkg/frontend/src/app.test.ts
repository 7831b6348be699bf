import { beforeEach, describe, expect, it } from "vitest";

import { ApiError, ChatReply, FaqAnswer, FaqCard } from "./api.js";
import { Api, createApp } from "./app.js";

const CARDS: FaqCard[] = [
  { id: "faq-004", question: "How do I cancel my subscription?", language: "en" },
  { id: "faq-024", question: "ভিডিও বারবার আটকে যাচ্ছে কেন?", language: "bn" },
  { id: "faq-016", question: "How do I redeem a promotional discount code?", language: "en" },
];

const STORED_ANSWER = "Go to Account > Subscription and tap Cancel subscription.";

class StubApi implements Api {
  sampleCalls = 0;
  answerCalls: string[] = [];
  chatCalls: string[] = [];

  sampleResult: Promise<FaqCard[]> = Promise.resolve(CARDS);
  chatResult: (query: string) => Promise<ChatReply> = (query) =>
    Promise.resolve({
      answer: `generated reply to: ${query}`,
      source: "generated",
      detected_language: { language: "english", script: "roman" },
      context_ids: ["faq-002", "faq-009", "faq-030"],
      translated_query: query,
    });

  fetchFaqSample(): Promise<FaqCard[]> {
    this.sampleCalls += 1;
    return this.sampleResult;
  }

  fetchFaqAnswer(id: string): Promise<FaqAnswer> {
    this.answerCalls.push(id);
    return Promise.resolve({ id, answer: STORED_ANSWER });
  }

  postChat(query: string): Promise<ChatReply> {
    this.chatCalls.push(query);
    return this.chatResult(query);
  }
}

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

let root: HTMLElement;
let api: StubApi;

beforeEach(() => {
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.append(root);
  api = new StubApi();
});

async function startApp() {
  const app = createApp(root, api);
  await app.init();
  await flush();
  return app;
}

describe("home screen", () => {
  it("renders three clickable FAQ cards", async () => {
    await startApp();
    const cards = root.querySelectorAll(".faq-card");
    expect(cards).toHaveLength(3);
    expect(cards[0].textContent).toContain("How do I cancel my subscription?");
    expect(cards[1].textContent).toContain("ভিডিও বারবার আটকে যাচ্ছে কেন?");
    expect(api.sampleCalls).toBe(1);
  });

  it("shows the offline banner and disables input when the backend is down", async () => {
    api.sampleResult = Promise.reject(new TypeError("fetch failed"));
    await startApp();
    const banner = root.querySelector('[data-testid="offline-banner"]')!;
    expect(banner.classList.contains("hidden")).toBe(false);
    const input = root.querySelector<HTMLInputElement>('[data-testid="chat-input"]')!;
    expect(input.disabled).toBe(true);
    expect(root.querySelectorAll(".faq-card")).toHaveLength(0);
  });
});

describe("FAQ card click", () => {
  it("shows the stored answer with a cache badge and never calls /v1/chat", async () => {
    await startApp();
    root.querySelectorAll<HTMLButtonElement>(".faq-card")[0].click();
    await flush();
    const badge = root.querySelector('[data-testid="badge"]')!;
    expect(badge.textContent).toBe("cache");
    const answer = root.querySelector(".answer-text")!;
    expect(answer.textContent).toBe(STORED_ANSWER);
    expect(api.answerCalls).toEqual(["faq-004"]);
    expect(api.chatCalls).toEqual([]);
  });

  it("shows the matched FAQ question on the cache turn", async () => {
    await startApp();
    root.querySelectorAll<HTMLButtonElement>(".faq-card")[1].click();
    await flush();
    const matched = root.querySelector(".matched-question")!;
    expect(matched.textContent).toBe("ভিডিও বারবার আটকে যাচ্ছে কেন?");
  });
});

describe("free-text chat", () => {
  async function submit(text: string) {
    const input = root.querySelector<HTMLInputElement>('[data-testid="chat-input"]')!;
    const form = root.querySelector("form")!;
    input.value = text;
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    await flush();
  }

  it("posts to /v1/chat and renders a generated badge with expandable context ids", async () => {
    await startApp();
    await submit("Can I gift a subscription?");
    expect(api.chatCalls).toEqual(["Can I gift a subscription?"]);
    const badge = root.querySelector('[data-testid="badge"]')!;
    expect(badge.textContent).toBe("generated");
    const details = root.querySelector("details.contexts")!;
    expect(details.querySelector("summary")!.textContent).toBe("3 context entries");
    expect(details.hasAttribute("open")).toBe(false); // collapsed by default
    const ids = [...details.querySelectorAll(".context-id")].map((li) => li.textContent);
    expect(ids).toEqual(["faq-002", "faq-009", "faq-030"]);
    const language = root.querySelector('[data-testid="language"]')!;
    expect(language.textContent).toBe("English");
  });

  it("renders turns in submission order", async () => {
    await startApp();
    await submit("first question");
    await submit("second question");
    const texts = [...root.querySelectorAll(".turn-user .turn-text")].map((p) => p.textContent);
    expect(texts).toEqual(["first question", "second question"]);
    const answers = [...root.querySelectorAll(".answer-text")].map((p) => p.textContent);
    expect(answers[0]).toContain("first question");
    expect(answers[1]).toContain("second question");
  });

  it("disables input while a request is pending and re-enables after", async () => {
    await startApp();
    let release: (reply: ChatReply) => void;
    api.chatResult = () =>
      new Promise((resolve) => {
        release = resolve;
      });
    await submit("slow question");
    const input = root.querySelector<HTMLInputElement>('[data-testid="chat-input"]')!;
    const pending = root.querySelector('[data-testid="pending"]')!;
    expect(input.disabled).toBe(true);
    expect(pending.classList.contains("hidden")).toBe(false);
    release!({
      answer: "done",
      source: "generated",
      detected_language: { language: "english", script: "roman" },
      context_ids: ["faq-001"],
    });
    await flush();
    expect(input.disabled).toBe(false);
    expect(pending.classList.contains("hidden")).toBe(true);
  });

  it("keeps prior turns and offers retry when the backend returns an error", async () => {
    await startApp();
    await submit("good question");
    api.chatResult = () => Promise.reject(new ApiError("upstream provider failed", 502));
    await submit("doomed question");
    const badges = [...root.querySelectorAll('[data-testid="badge"]')].map((b) => b.textContent);
    expect(badges).toEqual(["generated", "error"]);
    expect(root.querySelectorAll(".turn-user")).toHaveLength(2);

    // retry re-submits the same text once the backend recovers
    api.chatResult = (query) =>
      Promise.resolve({
        answer: `recovered: ${query}`,
        source: "generated",
        detected_language: { language: "english", script: "roman" },
        context_ids: ["faq-001"],
      });
    root.querySelector<HTMLButtonElement>('[data-testid="retry"]')!.click();
    await flush();
    expect(api.chatCalls).toEqual(["good question", "doomed question", "doomed question"]);
    const answers = [...root.querySelectorAll(".answer-text")].map((p) => p.textContent);
    expect(answers.at(-1)).toBe("recovered: doomed question");
  });

  it("renders cache-source chat replies with the cache badge", async () => {
    await startApp();
    api.chatResult = () =>
      Promise.resolve({
        answer: STORED_ANSWER,
        source: "cache",
        detected_language: { language: "english", script: "roman" },
        matched_faq_id: "faq-004",
      });
    await submit("How do I cancel my subscription?");
    expect(root.querySelector('[data-testid="badge"]')!.textContent).toBe("cache");
    expect(root.querySelector(".matched-question")!.textContent).toBe(
      "How do I cancel my subscription?",
    );
    expect(api.chatCalls).toHaveLength(1);
  });

  it("escapes HTML in answers and preserves Bengali text exactly", async () => {
    await startApp();
    const tricky = "<script>alert('x')</script> টাকা ফেরত ৫ দিনের মধ্যে";
    api.chatResult = () =>
      Promise.resolve({
        answer: tricky,
        source: "generated",
        detected_language: { language: "bengali", script: "bengali" },
        context_ids: ["faq-028"],
      });
    await submit("refund somporke bolun");
    const answer = root.querySelector(".answer-text")!;
    expect(answer.textContent).toBe(tricky); // byte-preserving
    expect(answer.querySelector("script")).toBeNull(); // inert markup
    expect(root.querySelector('[data-testid="language"]')!.textContent).toBe("Bengali");
  });

  it("ignores empty submissions", async () => {
    await startApp();
    await submit("   ");
    expect(api.chatCalls).toEqual([]);
    expect(root.querySelectorAll(".turn")).toHaveLength(0);
  });
});
