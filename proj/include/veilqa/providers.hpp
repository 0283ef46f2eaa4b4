#pragma once
// Model backends: chat completion and text embedding, with per-call usage
// accounting and deterministic fixture implementations for tests.
//
// All pipeline traffic flows through ProviderHub, which audits every outbound
// payload (completions and embedding texts) against the privacy map before it
// leaves the process. The hub is the only provider surface the pipeline sees.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "veilqa/privacy_guard.hpp"
#include "veilqa/types.hpp"

namespace veilqa {

struct DecodingParams {
    double temperature = 0.0;
    double frequency_penalty = 0.0;
    double presence_penalty = 0.0;
    int max_tokens = 256;
};

struct Usage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

struct Completion {
    std::string text;
    Usage usage;
};

using Vector = std::vector<double>;

// cos(x, y); zero vectors compare as 0.
double cosine(const Vector& a, const Vector& b);

// Payload blocked by the privacy audit. Carries the report.
struct LeakError : ProviderError {
    explicit LeakError(const std::string& what, LeakReport report)
        : ProviderError(what), report(std::move(report)) {}
    LeakReport report;
};

// ---------------------------------------------------------------------------
// Accounting

struct ModuleUsage {
    std::int64_t calls = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

struct CostReport {
    std::int64_t llm_calls = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t total_tokens = 0;
    std::int64_t embed_calls = 0;
    std::int64_t embed_texts = 0;
    std::map<std::string, ModuleUsage> by_module;
};

class UsageMeter {
public:
    void add_call(const std::string& module, const Usage& usage);
    void add_embed(const std::string& module, std::size_t texts);
    void merge(const UsageMeter& other);
    CostReport report() const;

    struct CallRecord {
        std::string module;
        std::int64_t input_tokens;
        std::int64_t output_tokens;
        bool is_embed;
        std::int64_t embed_texts;
    };
    std::vector<CallRecord> call_log() const;

private:
    mutable std::mutex mu_;
    std::vector<CallRecord> log_;
};

// ---------------------------------------------------------------------------
// Backends

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual Completion complete(const std::string& module, const std::string& prompt,
                                const DecodingParams& params) = 0;
    // Deterministic backends never retry.
    virtual bool deterministic() const { return false; }
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::size_t dimension() const = 0;
};

// Whitespace token count; the fixture backends' token accounting unit.
std::int64_t whitespace_tokens(const std::string& text);

// Collapses whitespace runs and trims; fixture keys hash this form.
std::string normalize_prompt(const std::string& prompt);

// FNV-1a 64 as 16 hex chars.
std::string prompt_digest(const std::string& prompt);

// Keyed playback: (module, digest of normalized prompt) -> scripted reply.
// Unmatched prompts fail loudly.
class FixtureChatBackend final : public ChatBackend {
public:
    Completion complete(const std::string& module, const std::string& prompt,
                        const DecodingParams& params) override;
    bool deterministic() const override { return true; }

    // Token counts < 0 mean "derive from whitespace tokens at call time".
    void add_script(const std::string& module, const std::string& prompt,
                    const std::string& reply, std::int64_t input_tokens = -1,
                    std::int64_t output_tokens = -1);

    // Line-delimited records: {digest, module, text, input_tokens, output_tokens}.
    void load(const std::string& path);
    void save(const std::string& path) const;

    std::size_t size() const { return scripts_.size(); }

private:
    struct Script {
        std::string text;
        std::int64_t input_tokens;
        std::int64_t output_tokens;
    };
    std::map<std::pair<std::string, std::string>, Script> scripts_;
};

// Case-folded alphanumeric tokenization hashed into a fixed-dimension bag.
// Shared tokens raise cosine; disjoint token sets score 0 (modulo hash
// collisions, which the 256-dim default makes rare on toy vocabularies).
class FixtureEmbedder final : public Embedder {
public:
    explicit FixtureEmbedder(std::size_t dim = 256) : dim_(dim) {}
    std::vector<Vector> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dim_; }

    static std::vector<std::string> tokenize(const std::string& text);

private:
    std::size_t dim_;
};

// OpenAI-compatible chat-completions client. Transport failures retry up to
// `retries` times with exponential backoff.
class OpenAiChatBackend final : public ChatBackend {
public:
    OpenAiChatBackend(std::string base_url, std::string api_key, std::string model,
                      int retries = 3);
    Completion complete(const std::string& module, const std::string& prompt,
                        const DecodingParams& params) override;

private:
    std::string base_url_;
    std::string api_key_;
    std::string model_;
    int retries_;
};

// ---------------------------------------------------------------------------
// Audited facade

class ProviderHub {
public:
    ProviderHub(std::shared_ptr<ChatBackend> chat, std::shared_ptr<Embedder> embedder,
                const PrivacyMap* privacy, AllowList allow,
                std::shared_ptr<UsageMeter> meter, std::shared_ptr<AuditLog> audit);

    // Audits, sends, and accounts one completion. Throws LeakError when the
    // prompt carries a protected name; ProviderError on transport failure
    // after retries or on an empty completion.
    Completion complete(const std::string& module, const std::string& prompt,
                        const DecodingParams& params);

    // Audits each text, then embeds the batch.
    std::vector<Vector> embed(const std::string& module,
                              const std::vector<std::string>& texts);

    UsageMeter& meter() { return *meter_; }
    AuditLog& audit_log() { return *audit_; }
    const AllowList& allow_list() const { return allow_; }

private:
    void audit_or_throw(const std::string& module, const std::string& payload);

    std::shared_ptr<ChatBackend> chat_;
    std::shared_ptr<Embedder> embedder_;
    const PrivacyMap* privacy_;
    AllowList allow_;
    std::shared_ptr<UsageMeter> meter_;
    std::shared_ptr<AuditLog> audit_;
};

}  // namespace veilqa
