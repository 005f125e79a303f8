#include "iclmine/errors.hpp"
#include "iclmine/io.hpp"
#include "iclmine/pipeline.hpp"
#include "iclmine/text.hpp"

#include "support/test_util.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>

using namespace iclmine;
using namespace iclmine::pipeline;
using config::Policy;
using testutil::TempDir;
namespace fs = std::filesystem;

TEST_SUITE("pipeline")
{
    TEST_CASE("stages skip when their outputs are current")
    {
        TempDir dir;
        const auto c = testutil::toy_config(dir.path());
        fs::path run_dir;
        {
            Runner r(c);
            run_dir = r.run_dir();
            CHECK(r.mine_words() == StageStatus::ran);
            CHECK(r.build_w2w(false) == StageStatus::ran);
            CHECK(r.mine_sentences(false) == StageStatus::ran);
            CHECK(r.translate(Policy::topk_bm25, false) == StageStatus::ran);
            CHECK(r.evaluate(Policy::topk_bm25, false) == StageStatus::ran);
            CHECK(r.backends().llm_calls() > 0);
        }
        Runner again(c);
        CHECK(again.run_dir() == run_dir);
        CHECK(again.mine_words() == StageStatus::skipped);
        CHECK(again.build_w2w(false) == StageStatus::skipped);
        CHECK(again.mine_sentences(false) == StageStatus::skipped);
        CHECK(again.translate(Policy::topk_bm25, false) == StageStatus::skipped);
        CHECK(again.evaluate(Policy::topk_bm25, false) == StageStatus::skipped);
        CHECK(again.backends().llm_calls() == 0);
        CHECK(again.backends().embedding_calls() == 0);
    }

    TEST_CASE("a modified output re-runs its stage")
    {
        TempDir dir;
        const auto c = testutil::toy_config(dir.path());
        {
            Runner r(c);
            r.mine_words();
            testutil::write_text(r.path(files::lexicon), "tampered\tx\t\tk_shot\n");
        }
        Runner r(c);
        CHECK(r.mine_words() == StageStatus::ran);
        CHECK(testutil::read_text(r.path(files::lexicon)) ==
              testutil::read_text(testutil::toy_dir() / "golden" / files::lexicon));
        // Served from the cache.
        CHECK(r.backends().llm_calls() == 0);
    }

    TEST_CASE("missing prerequisites")
    {
        TempDir dir;
        Runner r(testutil::toy_config(dir.path()));
        CHECK_THROWS_WITH_AS(r.translate(Policy::topk, false), doctest::Contains("--auto"), DataError);
        CHECK(r.translate(Policy::topk, true) == StageStatus::ran);
        CHECK(r.stage_complete("words"));
        CHECK(r.stage_complete("sentences"));
        CHECK_FALSE(r.stage_complete("translate.random"));
    }

    TEST_CASE("changing tau gives a new run directory but reuses the cache")
    {
        TempDir dir;
        auto c = testutil::toy_config(dir.path());
        fs::path first;
        {
            Runner r(c);
            r.run_all(std::vector<Policy>{Policy::topk_bm25});
            first = r.run_dir();
        }
        c.tau = 0.3;
        Runner r(c);
        CHECK(r.run_dir() != first);
        r.mine_words();
        r.build_w2w(false);
        r.mine_sentences(false);
        CHECK(r.backends().llm_calls() == 0);
        CHECK(r.backends().embedding_calls() == 0);
        CHECK(testutil::read_text(r.path(files::pool)) == testutil::read_text(first / files::pool));
    }

    TEST_CASE("run directory lock")
    {
        TempDir dir;
        const auto c = testutil::toy_config(dir.path());
        Runner r(c);
        CHECK_THROWS_AS(Runner{c}, ConfigError);
    }

    TEST_CASE("stale lock is taken over")
    {
        TempDir dir;
        const auto c = testutil::toy_config(dir.path());
        fs::path run_dir;
        {
            Runner r(c);
            run_dir = r.run_dir();
        }
        // Above the kernel's pid_max, so never a live process.
        testutil::write_text(run_dir / "run.lock", "999999999\n");
        CHECK_NOTHROW(Runner{c});
    }

    TEST_CASE("audit and report contents")
    {
        TempDir dir;
        Runner r(testutil::toy_config(dir.path()));
        r.run_all(std::vector<Policy>{Policy::uw2w, Policy::topk_bm25});
        const auto audit = text::split_lines(testutil::read_text(r.path(files::audit(Policy::topk_bm25))));
        CHECK(audit.size() == 6);
        const auto first = nlohmann::json::parse(audit.front());
        CHECK(first["index"] == 0);
        CHECK(first["examples"].size() == 4);
        CHECK(first["bm25"].size() == 4);
        CHECK(first.contains("fallback"));

        const auto uw2w = nlohmann::json::parse(
            text::split_lines(testutil::read_text(r.path(files::audit(Policy::uw2w)))).front());
        CHECK(uw2w.contains("copied_through"));

        const auto report = nlohmann::json::parse(testutil::read_text(r.path(files::report_json)));
        REQUIRE(report.size() == 2);
        CHECK(report[0]["system"] == "uw2w");
        CHECK(report[1]["sentence_count"] == 6);
        const auto txt = testutil::read_text(r.path(files::report_txt));
        CHECK(txt.find("topk_bm25") != std::string::npos);
        CHECK(txt.find("zrb_Latn→qel_Latn") != std::string::npos);
    }

    TEST_CASE("run name depends on inputs")
    {
        TempDir dir;
        auto c = testutil::toy_config(dir.path());
        const nlohmann::json id = {{"llm", "x"}};
        const auto base = run_name(c, id);
        CHECK(base.rfind("run-", 0) == 0);
        CHECK(base.size() == 16);
        CHECK(run_name(c, {{"llm", "y"}}) != base);
        c.seed = 99;
        CHECK(run_name(c, id) != base);
    }
}
