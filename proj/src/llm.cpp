#include "tablerag/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "tablerag/prompts.hpp"

namespace tablerag {

ChatMessage ChatMessage::system_msg(std::string text) {
    return {Role::system, std::move(text), std::nullopt, std::nullopt};
}
ChatMessage ChatMessage::user_msg(std::string text) {
    return {Role::user, std::move(text), std::nullopt, std::nullopt};
}
ChatMessage ChatMessage::assistant_msg(std::string text) {
    return {Role::assistant, std::move(text), std::nullopt, std::nullopt};
}
ChatMessage ChatMessage::assistant_tool_call(ToolCall call) {
    return {Role::assistant, "", std::move(call), std::nullopt};
}
ChatMessage ChatMessage::tool_result(std::string call_id, std::string text) {
    return {Role::tool, std::move(text), std::nullopt, std::move(call_id)};
}

ToolSpec solve_subquery_tool() {
    return {"solve_subquery",
            "Return answer for the decomposed subquery",
            nlohmann::json{
                {"type", "object"},
                {"properties",
                 {{"subquery",
                   {{"type", "string"}, {"description", "The subquery to be solved"}}}}},
                {"required", {"subquery"}},
                {"additionalProperties", false}}};
}

const char* to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::decompose: return "decompose";
        case PromptKind::nl2sql: return "nl2sql";
        case PromptKind::compose: return "compose";
        case PromptKind::judge: return "judge";
    }
    return "unknown";
}

PromptKind prompt_kind_from_string(const std::string& s) {
    if (s == "decompose") return PromptKind::decompose;
    if (s == "nl2sql") return PromptKind::nl2sql;
    if (s == "compose") return PromptKind::compose;
    if (s == "judge") return PromptKind::judge;
    throw Error(ErrorKind::UnknownPromptKind, "unknown prompt kind: " + s);
}

PromptKind classify_prompt(const std::vector<ChatMessage>& messages) {
    for (const auto& m : messages) {
        if (m.role != Role::system && m.role != Role::user) continue;
        if (m.content.find(prompts::kDecomposeSentinel) != std::string::npos) {
            return PromptKind::decompose;
        }
        if (m.content.find(prompts::kComposeSentinel) != std::string::npos) {
            return PromptKind::compose;
        }
        if (m.content.find(prompts::kJudgeSentinel) != std::string::npos) {
            return PromptKind::judge;
        }
        if (m.content.find(prompts::kNl2SqlSentinel) != std::string::npos) {
            return PromptKind::nl2sql;
        }
    }
    throw Error(ErrorKind::UnknownPromptKind, "no sentinel line found in prompt");
}

// --- ScriptedProvider ---

ScriptedProvider ScriptedProvider::from_jsonl(const std::string& text) {
    std::vector<Step> steps;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::ConfigError,
                        "transcript line " + std::to_string(line_no) + ": " + e.what());
        }
        Step step;
        step.expected_kind = prompt_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("tool_call")) {
            ToolCall call;
            call.id = j["tool_call"].value("id", "call_" + std::to_string(line_no));
            call.name = j["tool_call"].at("name");
            call.arguments = j["tool_call"].at("arguments");
            step.tool_call = std::move(call);
        } else {
            step.content = j.at("response").get<std::string>();
        }
        steps.push_back(std::move(step));
    }
    return ScriptedProvider(std::move(steps));
}

ScriptedProvider ScriptedProvider::from_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::ConfigError, "transcript file not found: " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_jsonl(ss.str());
}

ChatMessage ScriptedProvider::complete(const std::vector<ChatMessage>& messages,
                                       const std::vector<ToolSpec>&) {
    if (next_ >= steps_.size()) {
        throw Error(ErrorKind::TransportError, "scripted transcript exhausted");
    }
    PromptKind kind = classify_prompt(messages);
    const Step& step = steps_[next_];
    if (kind != step.expected_kind) {
        throw Error(ErrorKind::TransportError,
                    std::string("transcript mismatch at step ") + std::to_string(next_) +
                        ": expected " + to_string(step.expected_kind) + " prompt, got " +
                        to_string(kind));
    }
    ++next_;
    if (step.tool_call) {
        return ChatMessage::assistant_tool_call(*step.tool_call);
    }
    return ChatMessage::assistant_msg(*step.content);
}

// --- HttpChatProvider ---

namespace {

const char* role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

}  // namespace

ChatMessage HttpChatProvider::complete(const std::vector<ChatMessage>& messages,
                                       const std::vector<ToolSpec>& tools) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : messages) {
        nlohmann::json jm{{"role", role_name(m.role)}, {"content", m.content}};
        if (m.tool_call) {
            jm["tool_calls"] = nlohmann::json::array(
                {{{"id", m.tool_call->id},
                  {"type", "function"},
                  {"function",
                   {{"name", m.tool_call->name},
                    {"arguments", m.tool_call->arguments.dump()}}}}});
        }
        if (m.tool_call_id) jm["tool_call_id"] = *m.tool_call_id;
        body["messages"].push_back(std::move(jm));
    }
    if (!tools.empty()) {
        body["tools"] = nlohmann::json::array();
        for (const auto& t : tools) {
            body["tools"].push_back({{"type", "function"},
                                     {"function",
                                      {{"name", t.name},
                                       {"description", t.description},
                                       {"parameters", t.parameters}}}});
        }
    }

    auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::ConfigError, "bad endpoint: " + config_.endpoint);
    }
    auto path_start = config_.endpoint.find('/', scheme_end + 3);
    std::string host = config_.endpoint.substr(0, path_start);
    std::string path =
        path_start == std::string::npos ? "/v1/chat/completions" : config_.endpoint.substr(path_start);

    httplib::Client client(host);
    client.set_read_timeout(config_.timeout.count(), 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw Error(ErrorKind::TransportError,
                    "chat endpoint " + config_.endpoint + " failed" +
                        (res ? " with status " + std::to_string(res->status) : ""));
    }

    nlohmann::json response = nlohmann::json::parse(res->body);
    const auto& message = response.at("choices").at(0).at("message");
    ChatMessage out;
    out.role = Role::assistant;
    if (message.contains("content") && !message["content"].is_null()) {
        out.content = message["content"].get<std::string>();
    }
    if (message.contains("tool_calls") && !message["tool_calls"].is_null() &&
        !message["tool_calls"].empty()) {
        if (message["tool_calls"].size() > 1) {
            throw Error(ErrorKind::MalformedResponse, "provider returned multiple tool calls");
        }
        const auto& tc = message["tool_calls"][0];
        ToolCall call;
        call.id = tc.value("id", "call_0");
        call.name = tc.at("function").at("name");
        auto args = tc.at("function").at("arguments");
        call.arguments = args.is_string() ? nlohmann::json::parse(args.get<std::string>()) : args;
        out.tool_call = std::move(call);
    }
    return out;
}

// --- Gateway ---

Gateway::Gateway(std::shared_ptr<ChatProvider> provider, int max_retries, SleepFn sleep)
    : provider_(std::move(provider)),
      max_retries_(max_retries),
      sleep_(sleep ? std::move(sleep) : [](std::chrono::milliseconds d) {
          std::this_thread::sleep_for(d);
      }) {}

ChatMessage Gateway::chat(const std::vector<ChatMessage>& messages,
                          const std::vector<ToolSpec>& tools) {
    if (messages.empty()) {
        throw Error(ErrorKind::MalformedResponse, "chat called with no messages");
    }
    if (messages.front().role != Role::system && messages.front().role != Role::user) {
        throw Error(ErrorKind::MalformedResponse, "first message must be system or user");
    }

    std::chrono::milliseconds backoff{1000};
    for (int attempt = 0;; ++attempt) {
        ++attempts_;
        try {
            ChatMessage reply = provider_->complete(messages, tools);
            bool has_content = !reply.content.empty();
            bool has_tool = reply.tool_call.has_value();
            if (has_content == has_tool) {
                throw Error(ErrorKind::MalformedResponse,
                            has_tool ? "assistant returned both content and a tool call"
                                     : "assistant returned neither content nor tool call");
            }
            if (has_tool && reply.tool_call->name != "solve_subquery") {
                throw Error(ErrorKind::MalformedResponse,
                            "unexpected tool: " + reply.tool_call->name);
            }
            return reply;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TransportError || !provider_->retryable() ||
                attempt >= max_retries_) {
                throw;
            }
            sleep_(backoff);
            backoff *= 2;
        }
    }
}

}  // namespace tablerag
