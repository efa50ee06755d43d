#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "tablerag/config.hpp"

using namespace tablerag;

namespace {

std::string write_config(const std::string& body) {
    std::string path = "test_config.json";
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("defaults match the reference constants") {
    AppConfig config;
    CHECK(config.recall_n == 30);
    CHECK(config.rerank_k == 3);
    CHECK(config.chunking.chunk_size == 1000);
    CHECK(config.chunking.overlap == 200);
    CHECK(config.max_iterations == 5);
    CHECK_NOTHROW(config.validate());
}

TEST_CASE("validate rejects inconsistent settings") {
    AppConfig config;
    config.rerank_k = 40;  // > recall_n
    CHECK_THROWS_AS(config.validate(), Error);

    config = {};
    config.max_iterations = 0;
    CHECK_THROWS_AS(config.validate(), Error);

    config = {};
    config.chunking = {100, 100};
    CHECK_THROWS_AS(config.validate(), Error);
}

TEST_CASE("merge_file overrides only the fields present") {
    AppConfig config;
    auto path = write_config(R"({
        "recall_n": 10,
        "provider": {"endpoint": "http://file:1", "model": "file-model"}
    })");
    config.merge_file(path);
    CHECK(config.recall_n == 10);
    CHECK(config.rerank_k == 3);  // untouched
    CHECK(config.main_provider.endpoint == "http://file:1");
    CHECK(config.main_provider.model == "file-model");
    CHECK(!config.judge_provider.has_value());
}

TEST_CASE("merge_file errors are ConfigError with context") {
    AppConfig config;
    CHECK_THROWS_AS(config.merge_file("does_not_exist.json"), Error);
    auto path = write_config("{broken");
    CHECK_THROWS_AS(config.merge_file(path), Error);
}

TEST_CASE("env overrides layer on top of file values") {
    AppConfig config;
    auto path = write_config(R"({"provider": {"endpoint": "http://file:1"}})");
    config.merge_file(path);
    setenv("TABLERAG_ENDPOINT", "http://env:2", 1);
    setenv("TABLERAG_JUDGE_MODEL", "judge-model", 1);
    config.merge_env();
    unsetenv("TABLERAG_ENDPOINT");
    unsetenv("TABLERAG_JUDGE_MODEL");
    CHECK(config.main_provider.endpoint == "http://env:2");
    REQUIRE(config.judge_provider.has_value());
    CHECK(config.judge_provider->model == "judge-model");
    // the judge inherits the already-merged main endpoint
    CHECK(config.judge_provider->endpoint == "http://env:2");
}

TEST_CASE("judge provider defaults to the main provider settings when configured in a file") {
    AppConfig config;
    auto path = write_config(R"({
        "provider": {"endpoint": "http://main:1", "model": "m"},
        "judge_provider": {"model": "j"}
    })");
    config.merge_file(path);
    REQUIRE(config.judge_provider.has_value());
    CHECK(config.judge_provider->endpoint == "http://main:1");
    CHECK(config.judge_provider->model == "j");
}
