/**
 * Single-page chat client.
 *
 * Home screen shows three FAQ cards sampled from the service; clicking a
 * card displays the stored answer instantly (no chat call). Free-text
 * queries go through POST /v1/chat. Every answer turn carries a
 * provenance badge (cache / generated / fallback / error) and the
 * detected language; generated turns expose their context ids collapsed
 * behind a disclosure widget.
 *
 * All text is rendered through `textContent`, so answers are shown
 * byte-for-byte and HTML in them is inert.
 */

import { ApiError, ChatReply, FaqAnswer, FaqCard } from "./api.js";

/** Structural surface of ApiClient, so tests can stub the network. */
export interface Api {
  fetchFaqSample(n?: number): Promise<FaqCard[]>;
  fetchFaqAnswer(id: string): Promise<FaqAnswer>;
  postChat(query: string): Promise<ChatReply>;
}

const CARD_LANGUAGE_LABELS: Record<string, string> = {
  en: "English",
  bn: "Bengali",
};

export function languageLabel(reply: ChatReply): string {
  const name = reply.detected_language.language;
  return name.charAt(0).toUpperCase() + name.slice(1);
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

interface AnswerTurn {
  answer: string;
  badge: "cache" | "generated" | "fallback" | "error";
  language?: string;
  contextIds?: string[];
  matchedQuestion?: string;
  retryText?: string;
}

export class App {
  private pending = false;
  private cardQuestions = new Map<string, FaqCard>();

  private banner: HTMLDivElement;
  private cardsSection: HTMLElement;
  private chatLog: HTMLElement;
  private input: HTMLInputElement;
  private sendButton: HTMLButtonElement;
  private pendingIndicator: HTMLDivElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
  ) {
    this.banner = el("div", "banner hidden");
    this.banner.dataset.testid = "offline-banner";
    this.banner.textContent = "The service is unreachable. Please try again later.";

    this.cardsSection = el("section", "faq-cards");
    this.cardsSection.dataset.testid = "faq-cards";

    this.chatLog = el("section", "chat-log");
    this.chatLog.dataset.testid = "chat-log";

    const form = el("form", "chat-form");
    this.input = el("input", "chat-input");
    this.input.placeholder = "Ask a question in English, Bengali, or Banglish";
    this.input.dataset.testid = "chat-input";
    this.sendButton = el("button", "send-button", "Send");
    this.sendButton.type = "submit";
    this.sendButton.dataset.testid = "send-button";
    form.append(this.input, this.sendButton);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitQuery(this.input.value);
    });

    this.pendingIndicator = el("div", "pending hidden", "Thinking…");
    this.pendingIndicator.dataset.testid = "pending";

    this.root.append(this.banner, this.cardsSection, this.chatLog, form, this.pendingIndicator);
  }

  async init(): Promise<void> {
    try {
      const cards = await this.api.fetchFaqSample(3);
      this.renderCards(cards);
      this.input.focus();
    } catch {
      this.banner.classList.remove("hidden");
      this.setBusy(true);
    }
  }

  private renderCards(cards: FaqCard[]): void {
    this.cardsSection.replaceChildren();
    for (const card of cards) {
      this.cardQuestions.set(card.id, card);
      const button = el("button", "faq-card");
      button.type = "button";
      button.dataset.faqId = card.id;
      button.append(
        el("span", "faq-question", card.question),
        el("span", "faq-language", CARD_LANGUAGE_LABELS[card.language] ?? card.language),
      );
      button.addEventListener("click", () => void this.showFaqAnswer(card));
      this.cardsSection.append(button);
    }
  }

  /** Card click: the stored answer is shown directly, no chat call. */
  private async showFaqAnswer(card: FaqCard): Promise<void> {
    if (this.pending) return;
    this.setBusy(true);
    this.addUserTurn(card.question);
    try {
      const faq = await this.api.fetchFaqAnswer(card.id);
      this.addAnswerTurn({
        answer: faq.answer,
        badge: "cache",
        language: CARD_LANGUAGE_LABELS[card.language] ?? card.language,
        matchedQuestion: card.question,
      });
    } catch (error) {
      this.addAnswerTurn({
        answer: error instanceof ApiError ? error.message : "Request failed.",
        badge: "error",
      });
    } finally {
      this.setBusy(false);
    }
  }

  async submitQuery(text: string): Promise<void> {
    const query = text.trim();
    if (!query || this.pending) return;
    this.setBusy(true);
    this.addUserTurn(query);
    this.input.value = "";
    try {
      const reply = await this.api.postChat(query);
      const matched = reply.matched_faq_id
        ? this.cardQuestions.get(reply.matched_faq_id)?.question ?? reply.matched_faq_id
        : undefined;
      this.addAnswerTurn({
        answer: reply.answer,
        badge: reply.source,
        language: languageLabel(reply),
        contextIds: reply.source === "generated" ? reply.context_ids : undefined,
        matchedQuestion: reply.source === "cache" ? matched : undefined,
      });
    } catch (error) {
      this.addAnswerTurn({
        answer: error instanceof ApiError ? error.message : "Request failed.",
        badge: "error",
        retryText: query,
      });
    } finally {
      this.setBusy(false);
    }
  }

  private setBusy(busy: boolean): void {
    this.pending = busy;
    this.input.disabled = busy;
    this.sendButton.disabled = busy;
    this.pendingIndicator.classList.toggle("hidden", !busy);
  }

  private addUserTurn(text: string): void {
    const turn = el("div", "turn turn-user");
    turn.append(el("p", "turn-text", text));
    this.chatLog.append(turn);
  }

  private addAnswerTurn(data: AnswerTurn): void {
    const turn = el("div", `turn turn-answer turn-${data.badge}`);
    const meta = el("div", "turn-meta");
    const badge = el("span", `badge badge-${data.badge}`, data.badge);
    badge.dataset.testid = "badge";
    meta.append(badge);
    if (data.language) {
      const language = el("span", "language", data.language);
      language.dataset.testid = "language";
      meta.append(language);
    }
    turn.append(meta);
    if (data.matchedQuestion) {
      turn.append(el("p", "matched-question", data.matchedQuestion));
    }
    turn.append(el("p", "answer-text", data.answer));
    if (data.contextIds && data.contextIds.length > 0) {
      const details = el("details", "contexts");
      const plural = data.contextIds.length === 1 ? "entry" : "entries";
      details.append(el("summary", undefined, `${data.contextIds.length} context ${plural}`));
      const list = el("ul");
      for (const id of data.contextIds) {
        list.append(el("li", "context-id", id));
      }
      details.append(list);
      turn.append(details);
    }
    if (data.retryText !== undefined) {
      const retry = el("button", "retry", "Retry");
      retry.type = "button";
      retry.dataset.testid = "retry";
      const text = data.retryText;
      retry.addEventListener("click", () => void this.submitQuery(text));
      turn.append(retry);
    }
    this.chatLog.append(turn);
  }
}

export function createApp(root: HTMLElement, api: Api): App {
  return new App(root, api);
}
