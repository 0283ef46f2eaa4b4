#include "veilqa/providers.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace veilqa {

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ProviderError("embedding dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// Accounting

void UsageMeter::add_call(const std::string& module, const Usage& usage) {
    std::lock_guard<std::mutex> lock(mu_);
    log_.push_back({module, usage.input_tokens, usage.output_tokens, false, 0});
}

void UsageMeter::add_embed(const std::string& module, std::size_t texts) {
    std::lock_guard<std::mutex> lock(mu_);
    log_.push_back({module, 0, 0, true, static_cast<std::int64_t>(texts)});
}

void UsageMeter::merge(const UsageMeter& other) {
    auto theirs = other.call_log();
    std::lock_guard<std::mutex> lock(mu_);
    log_.insert(log_.end(), theirs.begin(), theirs.end());
}

CostReport UsageMeter::report() const {
    std::lock_guard<std::mutex> lock(mu_);
    CostReport r;
    for (const auto& rec : log_) {
        if (rec.is_embed) {
            r.embed_calls += 1;
            r.embed_texts += rec.embed_texts;
            continue;
        }
        r.llm_calls += 1;
        r.input_tokens += rec.input_tokens;
        r.output_tokens += rec.output_tokens;
        auto& m = r.by_module[rec.module];
        m.calls += 1;
        m.input_tokens += rec.input_tokens;
        m.output_tokens += rec.output_tokens;
    }
    r.total_tokens = r.input_tokens + r.output_tokens;
    return r;
}

std::vector<UsageMeter::CallRecord> UsageMeter::call_log() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_;
}

// ---------------------------------------------------------------------------
// Text utilities

std::int64_t whitespace_tokens(const std::string& text) {
    std::int64_t n = 0;
    bool in_token = false;
    for (char c : text) {
        bool ws = c == ' ' || c == '\t' || c == '\r' || c == '\n';
        if (!ws && !in_token) ++n;
        in_token = !ws;
    }
    return n;
}

std::string normalize_prompt(const std::string& prompt) {
    std::string out;
    out.reserve(prompt.size());
    bool in_ws = true;  // leading whitespace drops
    for (char c : prompt) {
        bool ws = c == ' ' || c == '\t' || c == '\r' || c == '\n';
        if (ws) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out += ' ';
        out += c;
        in_ws = false;
    }
    return out;
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace

std::string prompt_digest(const std::string& prompt) {
    return hex64(fnv1a64(normalize_prompt(prompt)));
}

// ---------------------------------------------------------------------------
// Fixture chat

Completion FixtureChatBackend::complete(const std::string& module, const std::string& prompt,
                                        const DecodingParams&) {
    auto digest = prompt_digest(prompt);
    auto it = scripts_.find({module, digest});
    if (it == scripts_.end()) {
        throw ProviderError("fixture miss: module=" + module + " digest=" + digest +
                            " prompt-head=\"" + normalize_prompt(prompt).substr(0, 96) + "\"");
    }
    const Script& s = it->second;
    Completion c;
    c.text = s.text;
    c.usage.input_tokens = s.input_tokens >= 0 ? s.input_tokens : whitespace_tokens(prompt);
    c.usage.output_tokens = s.output_tokens >= 0 ? s.output_tokens : whitespace_tokens(s.text);
    return c;
}

void FixtureChatBackend::add_script(const std::string& module, const std::string& prompt,
                                    const std::string& reply, std::int64_t input_tokens,
                                    std::int64_t output_tokens) {
    scripts_[{module, prompt_digest(prompt)}] = {reply, input_tokens, output_tokens};
}

void FixtureChatBackend::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read fixture file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("digest") || !j.contains("module") ||
            !j.contains("text")) {
            throw ConfigError("bad fixture record at line " + std::to_string(line_no) +
                              " of " + path);
        }
        scripts_[{j["module"], j["digest"]}] = {j["text"], j.value("input_tokens", -1),
                                                j.value("output_tokens", -1)};
    }
}

void FixtureChatBackend::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write fixture file: " + path);
    for (const auto& [key, s] : scripts_) {
        nlohmann::json j{{"digest", key.second},
                         {"module", key.first},
                         {"text", s.text},
                         {"input_tokens", s.input_tokens},
                         {"output_tokens", s.output_tokens}};
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Fixture embedder

std::vector<std::string> FixtureEmbedder::tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<Vector> FixtureEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        Vector v(dim_, 0.0);
        for (const auto& tok : tokenize(text)) {
            v[fnv1a64(tok) % dim_] += 1.0;
        }
        out.push_back(std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Live backend

OpenAiChatBackend::OpenAiChatBackend(std::string base_url, std::string api_key,
                                     std::string model, int retries)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)),
      model_(std::move(model)), retries_(retries) {}

Completion OpenAiChatBackend::complete(const std::string&, const std::string& prompt,
                                       const DecodingParams& params) {
    nlohmann::json body{
        {"model", model_},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", params.temperature},
        {"frequency_penalty", params.frequency_penalty},
        {"presence_penalty", params.presence_penalty},
        {"max_tokens", params.max_tokens},
    };

    auto scheme_end = base_url_.find("://");
    std::string rest = scheme_end == std::string::npos ? base_url_
                                                       : base_url_.substr(scheme_end + 3);
    auto slash = rest.find('/');
    std::string host = (scheme_end == std::string::npos ? "https://"
                                                        : base_url_.substr(0, scheme_end + 3)) +
                       (slash == std::string::npos ? rest : rest.substr(0, slash));
    std::string path = (slash == std::string::npos ? "" : rest.substr(slash)) +
                       "/chat/completions";

    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(200 << (attempt - 1)));
        }
        httplib::Client client(host);
        client.set_read_timeout(120, 0);
        httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure";
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            if (res->status >= 400 && res->status < 500 && res->status != 429) break;
            continue;
        }
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded()) {
            last_error = "invalid JSON reply";
            continue;
        }
        Completion c;
        c.text = j["choices"][0]["message"]["content"].get<std::string>();
        c.usage.input_tokens = j["usage"].value("prompt_tokens", 0);
        c.usage.output_tokens = j["usage"].value("completion_tokens", 0);
        return c;
    }
    throw ProviderError("chat completion failed after " + std::to_string(retries_ + 1) +
                        " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Audited facade

ProviderHub::ProviderHub(std::shared_ptr<ChatBackend> chat, std::shared_ptr<Embedder> embedder,
                         const PrivacyMap* privacy, AllowList allow,
                         std::shared_ptr<UsageMeter> meter, std::shared_ptr<AuditLog> audit)
    : chat_(std::move(chat)), embedder_(std::move(embedder)), privacy_(privacy),
      allow_(std::move(allow)), meter_(std::move(meter)), audit_(std::move(audit)) {
    if (!meter_) meter_ = std::make_shared<UsageMeter>();
    if (!audit_) audit_ = std::make_shared<AuditLog>();
}

void ProviderHub::audit_or_throw(const std::string& module, const std::string& payload) {
    if (!privacy_) return;
    auto report = audit_payload(payload, *privacy_, allow_);
    if (!report.clean()) {
        audit_->record(module, payload, report);
        throw LeakError("blocked outbound payload from " + module + ": " +
                            std::to_string(report.violations.size()) +
                            " protected name occurrence(s)",
                        std::move(report));
    }
}

Completion ProviderHub::complete(const std::string& module, const std::string& prompt,
                                 const DecodingParams& params) {
    if (prompt.empty()) throw ProviderError("empty prompt from " + module);
    audit_or_throw(module, prompt);

    Completion c = chat_->complete(module, prompt, params);
    if (c.text.empty()) throw ProviderError("empty completion from backend for " + module);
    meter_->add_call(module, c.usage);
    return c;
}

std::vector<Vector> ProviderHub::embed(const std::string& module,
                                       const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    for (const auto& t : texts) audit_or_throw(module, t);
    auto vectors = embedder_->embed(texts);
    if (vectors.size() != texts.size()) {
        throw ProviderError("embedder returned " + std::to_string(vectors.size()) +
                            " vectors for " + std::to_string(texts.size()) + " texts");
    }
    for (const auto& v : vectors) {
        if (v.size() != embedder_->dimension()) {
            throw ProviderError("embedding dimension mismatch within batch");
        }
    }
    meter_->add_embed(module, texts.size());
    return vectors;
}

}  // namespace veilqa
