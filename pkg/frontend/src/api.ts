/**
 * Typed client for the faqchat HTTP API (/v1/).
 *
 * All model traffic goes through the service; the UI holds no provider
 * credentials. The base URL is configurable at runtime via
 * `window.FAQCHAT_API_BASE` (set before the bundle loads) or per
 * ApiClient instance.
 */

export interface FaqCard {
  id: string;
  question: string;
  language: string;
}

export interface FaqAnswer {
  id: string;
  answer: string;
}

export interface DetectedLanguage {
  language: string;
  script: string;
}

export type AnswerSource = "cache" | "generated" | "fallback";

export interface ChatReply {
  answer: string;
  source: AnswerSource;
  detected_language: DetectedLanguage;
  matched_faq_id?: string;
  context_ids?: string[];
  translated_query?: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

declare global {
  interface Window {
    FAQCHAT_API_BASE?: string;
  }
}

export function defaultBaseUrl(): string {
  if (typeof window !== "undefined" && window.FAQCHAT_API_BASE) {
    return window.FAQCHAT_API_BASE;
  }
  return "";
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return body?.error?.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = defaultBaseUrl()) {}

  private async get(path: string): Promise<unknown> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) {
      throw new ApiError(await errorDetail(response), response.status);
    }
    return response.json();
  }

  async fetchFaqSample(n = 3): Promise<FaqCard[]> {
    const body = (await this.get(`/v1/faqs/sample?n=${n}`)) as { faqs: FaqCard[] };
    return body.faqs;
  }

  async fetchFaqAnswer(id: string): Promise<FaqAnswer> {
    return (await this.get(`/v1/faqs/${encodeURIComponent(id)}`)) as FaqAnswer;
  }

  async postChat(query: string): Promise<ChatReply> {
    const response = await fetch(this.baseUrl + "/v1/chat", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ query }),
    });
    if (!response.ok) {
      throw new ApiError(await errorDetail(response), response.status);
    }
    return (await response.json()) as ChatReply;
  }
}
