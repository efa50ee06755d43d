#include "tablerag/config.hpp"

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

namespace tablerag {

void AppConfig::validate() const {
    if (rerank_k < 1 || recall_n < rerank_k) {
        throw Error(ErrorKind::ConfigError, "requires recall N >= rerank k >= 1");
    }
    if (max_iterations < 1) {
        throw Error(ErrorKind::ConfigError, "max_iterations must be >= 1");
    }
    if (chunking.overlap >= chunking.chunk_size) {
        throw Error(ErrorKind::ConfigError, "chunk overlap must be smaller than chunk size");
    }
    if (main_provider.temperature < 0) {
        throw Error(ErrorKind::ConfigError, "temperature must be >= 0");
    }
}

namespace {

ProviderConfig provider_from_json(const nlohmann::json& j, const ProviderConfig& base) {
    ProviderConfig p = base;
    p.endpoint = j.value("endpoint", p.endpoint);
    p.model = j.value("model", p.model);
    p.api_key_env = j.value("api_key_env", p.api_key_env);
    p.temperature = j.value("temperature", p.temperature);
    p.max_retries = j.value("max_retries", p.max_retries);
    return p;
}

HttpPortConfig port_from_json(const nlohmann::json& j) {
    HttpPortConfig p;
    p.endpoint = j.value("endpoint", "");
    p.api_key_env = j.value("api_key_env", "");
    p.timeout_seconds = j.value("timeout_seconds", 30);
    return p;
}

}  // namespace

void AppConfig::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::ConfigError, "config file not found: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("config parse error: ") + e.what());
    }
    recall_n = j.value("recall_n", recall_n);
    rerank_k = j.value("rerank_k", rerank_k);
    chunking.chunk_size = j.value("chunk_size", chunking.chunk_size);
    chunking.overlap = j.value("chunk_overlap", chunking.overlap);
    max_iterations = j.value("max_iterations", max_iterations);
    workers = j.value("workers", workers);
    if (j.contains("provider")) main_provider = provider_from_json(j["provider"], main_provider);
    if (j.contains("judge_provider")) {
        judge_provider = provider_from_json(j["judge_provider"], main_provider);
    }
    if (j.contains("embedder")) embedder = port_from_json(j["embedder"]);
    if (j.contains("reranker")) reranker = port_from_json(j["reranker"]);
}

void AppConfig::merge_env() {
    if (const char* v = std::getenv("TABLERAG_ENDPOINT")) main_provider.endpoint = v;
    if (const char* v = std::getenv("TABLERAG_MODEL")) main_provider.model = v;
    if (const char* v = std::getenv("TABLERAG_JUDGE_ENDPOINT")) {
        if (!judge_provider) judge_provider = main_provider;
        judge_provider->endpoint = v;
    }
    if (const char* v = std::getenv("TABLERAG_JUDGE_MODEL")) {
        if (!judge_provider) judge_provider = main_provider;
        judge_provider->model = v;
    }
}

}  // namespace tablerag
