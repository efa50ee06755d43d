#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablerag/error.hpp"

namespace tablerag {

enum class Role { system, user, assistant, tool };

struct ToolCall {
    std::string id;
    std::string name;
    nlohmann::json arguments;  // parsed object
};

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    std::optional<ToolCall> tool_call;     // assistant messages only
    std::optional<std::string> tool_call_id;  // tool messages only

    static ChatMessage system_msg(std::string text);
    static ChatMessage user_msg(std::string text);
    static ChatMessage assistant_msg(std::string text);
    static ChatMessage assistant_tool_call(ToolCall call);
    static ChatMessage tool_result(std::string call_id, std::string text);
};

struct ToolSpec {
    std::string name;
    std::string description;
    nlohmann::json parameters;  // JSON schema
};

/// The single tool this artifact exposes to the decomposer.
ToolSpec solve_subquery_tool();

enum class PromptKind { decompose, nl2sql, compose, judge };

const char* to_string(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& s);

/// Routes a prompt by the sentinel instruction lines each builder embeds.
PromptKind classify_prompt(const std::vector<ChatMessage>& messages);

struct ProviderConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "TABLERAG_API_KEY";
    double temperature = 0.0;
    int max_retries = 3;
    std::chrono::seconds timeout{60};
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    /// One completion attempt. Throws Error(TransportError) on transport
    /// failure; the gateway owns retries.
    virtual ChatMessage complete(const std::vector<ChatMessage>& messages,
                                 const std::vector<ToolSpec>& tools) = 0;
    /// Whether a failed attempt is worth retrying.
    virtual bool retryable() const { return true; }
};

/// Deterministic test provider: consumes an ordered transcript, checking
/// each step's expected prompt kind against the incoming messages.
/// Single-session; clone per trace, never share across threads.
class ScriptedProvider : public ChatProvider {
public:
    struct Step {
        PromptKind expected_kind;
        std::optional<std::string> content;
        std::optional<ToolCall> tool_call;
    };

    explicit ScriptedProvider(std::vector<Step> steps) : steps_(std::move(steps)) {}

    static ScriptedProvider from_jsonl_file(const std::string& path);
    static ScriptedProvider from_jsonl(const std::string& text);

    ChatMessage complete(const std::vector<ChatMessage>& messages,
                         const std::vector<ToolSpec>& tools) override;
    bool retryable() const override { return false; }

    /// Fresh provider with the cursor reset; used by the eval fan-out.
    ScriptedProvider clone() const { return ScriptedProvider(steps_); }

    std::size_t remaining() const { return steps_.size() - next_; }

private:
    std::vector<Step> steps_;
    std::size_t next_ = 0;
};

/// Chat-completions HTTP provider (messages array in, choices out).
class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {}
    ChatMessage complete(const std::vector<ChatMessage>& messages,
                         const std::vector<ToolSpec>& tools) override;

private:
    ProviderConfig config_;
};

/// Retry/validation wrapper around a provider. Enforces the one-tool
/// protocol: any tool call other than solve_subquery is MalformedResponse.
class Gateway {
public:
    using SleepFn = std::function<void(std::chrono::milliseconds)>;

    Gateway(std::shared_ptr<ChatProvider> provider, int max_retries = 3,
            SleepFn sleep = nullptr);

    ChatMessage chat(const std::vector<ChatMessage>& messages,
                     const std::vector<ToolSpec>& tools = {});

    int attempts_made() const { return attempts_; }

private:
    std::shared_ptr<ChatProvider> provider_;
    int max_retries_;
    SleepFn sleep_;
    int attempts_ = 0;
};

}  // namespace tablerag
