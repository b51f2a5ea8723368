#include <storyecho/pipeline.hpp>
#include <storyecho/unicode.hpp>
#include <storyecho/validator.hpp>

#include <benchmark/benchmark.h>

namespace storyecho {
namespace {

StoryFramework sample_framework(Pipeline& pipeline, const ChildAvatar& avatar)
{
    return pipeline.generate_framework("厨房里的小发现", StoryMode::RealisticEveryday,
                                       BasicConstraints{}, avatar);
}

ChildAvatar sample_avatar()
{
    return {"child-0001", "乐乐", Gender::Girl, "yellow raincoat", {}, std::nullopt};
}

// One mock episode, generated once and shared.
const Episode& sample_episode()
{
    static const Episode episode = [] {
        MemoryAssetStore assets;
        MockProvider mock(assets, 42);
        Pipeline pipeline(mock, PromptLibrary::load(PromptLibrary::default_dir()));
        const auto avatar = sample_avatar();
        auto fw = sample_framework(pipeline, avatar);
        fw.framework_id = "fw-0001";
        return pipeline.generate_episode(fw, std::nullopt, "西兰花", avatar, BasicConstraints{},
                                         {});
    }();
    return episode;
}

void BM_CountHan(benchmark::State& state)
{
    std::string text;
    for (const auto& p : sample_episode().pages) {
        text += p.page_text_cn;
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(count_han_chars(text));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_CountHan);

void BM_ValidateEpisode(benchmark::State& state)
{
    const auto& episode = sample_episode();
    const BasicConstraints constraints;
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate_episode(episode, constraints));
    }
}
BENCHMARK(BM_ValidateEpisode);

void BM_ValidatePageGraph(benchmark::State& state)
{
    const auto& episode = sample_episode();
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate_page_graph(episode));
    }
}
BENCHMARK(BM_ValidatePageGraph);

void BM_CanonicalRoundTrip(benchmark::State& state)
{
    const auto& episode = sample_episode();
    for (auto _ : state) {
        benchmark::DoNotOptimize(canonical_parse<Episode>(canonical_serialize(episode)));
    }
}
BENCHMARK(BM_CanonicalRoundTrip);

void BM_MockEpisodeGeneration(benchmark::State& state)
{
    MemoryAssetStore assets;
    MockProvider mock(assets, 42);
    Pipeline pipeline(mock, PromptLibrary::load(PromptLibrary::default_dir()));
    const auto avatar = sample_avatar();
    auto fw = sample_framework(pipeline, avatar);
    fw.framework_id = "fw-0001";
    for (auto _ : state) {
        benchmark::DoNotOptimize(pipeline.generate_episode(fw, std::nullopt, "西兰花", avatar,
                                                           BasicConstraints{}, {}));
    }
}
BENCHMARK(BM_MockEpisodeGeneration);

} // namespace
} // namespace storyecho

BENCHMARK_MAIN();
