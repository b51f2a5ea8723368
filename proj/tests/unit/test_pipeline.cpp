#include "support.hpp"

#include <gtest/gtest.h>

namespace storyecho {
namespace {

using testing::ScriptedProvider;

ChildAvatar avatar(const std::string& nickname = "乐乐")
{
    return {"child-0001", nickname, Gender::Girl, "yellow raincoat", {}, std::nullopt};
}

StoryFramework framework()
{
    auto fw = testing::valid_framework();
    fw.framework_id = "fw-corpus";
    return fw;
}

RecapAndGoal recap()
{
    RecapAndGoal r;
    r.recap_cn = "上次在菜园里找到了小观察本。";
    r.micro_goal = "愿意看一看新的蔬菜";
    r.key_story_elements = {"小观察本"};
    r.continuity_hooks = {{"小观察本"}, "明天去厨房看看。"};
    return r;
}

PostMealRecord record(int rating, const std::string& food = "西兰花",
                      const std::string& description = "")
{
    PostMealRecord r;
    r.record_id = "rec-0001";
    r.target_food = food;
    r.self_rating = rating;
    r.self_description = description;
    return r;
}

Episode ending_for(const std::string& food, const std::string& nick = "乐乐")
{
    auto ep = testing::build_episode(
        {"ending", food, nick,
         {{InteractionType::Tap, 1, {}}, {InteractionType::None, 2, {}},
          {InteractionType::None, 3, {}}, {InteractionType::None, -1, {}}},
         "end_"},
        77);
    ep.pages[0].interaction->event_key = "end_tap";
    ep.kind = EpisodeKind::EndingExtension;
    return ep;
}

std::string short_draft()
{
    auto ep = testing::hand_built_corpus()[0];
    ep.pages[4].page_text_cn = testing::han_text(30, 1);
    return testing::draft_json(ep);
}

Errc code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::StorageError;
}

// -- run_with_validation -------------------------------------------------------

TEST(RunWithValidation, SucceedsAfterKFailures)
{
    for (int k = 0; k <= 2; ++k) {
        int calls = 0;
        std::vector<bool> got_repair;
        GenerationJob job;
        const int out = run_with_validation<int>(
            [&](const std::optional<ValidationReport>& repair) {
                got_repair.push_back(repair.has_value());
                return calls++;
            },
            [&](const int& v) {
                ValidationReport r;
                if (v < k) {
                    r.add(ViolationCode::PageTooShort, std::nullopt, "short");
                }
                return r;
            },
            2, &job);
        EXPECT_EQ(out, k);
        EXPECT_EQ(job.attempts, k + 1);
        EXPECT_TRUE(job.last_report->ok());
        ASSERT_EQ(got_repair.size(), static_cast<std::size_t>(k + 1));
        EXPECT_FALSE(got_repair.front());
        for (int i = 1; i <= k; ++i) {
            EXPECT_TRUE(got_repair[static_cast<std::size_t>(i)]);
        }
    }
}

TEST(RunWithValidation, FailsAfterLastRetry)
{
    int calls = 0;
    GenerationJob job;
    try {
        run_with_validation<int>(
            [&](const std::optional<ValidationReport>&) { return ++calls; },
            [](const int&) {
                ValidationReport r;
                r.add(ViolationCode::CycleDetected, std::nullopt, "loop");
                return r;
            },
            2, &job);
        FAIL();
    } catch (const GenerationFailedError& e) {
        EXPECT_EQ(e.code(), Errc::GenerationFailed);
        EXPECT_EQ(e.attempts(), 3);
        EXPECT_TRUE(e.report().has(ViolationCode::CycleDetected));
    }
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(job.status, JobStatus::Failed);
}

TEST(RunWithValidation, ProviderErrorsAreNotRetried)
{
    int calls = 0;
    EXPECT_EQ(code_of([&] {
                  run_with_validation<int>(
                      [&](const std::optional<ValidationReport>&) -> int {
                          ++calls;
                          fail(Errc::ProviderError, "down");
                      },
                      [](const int&) { return ValidationReport{}; }, 2);
              }),
              Errc::ProviderError);
    EXPECT_EQ(calls, 1);
}

TEST(RunWithValidation, NegativeRetriesRejected)
{
    EXPECT_EQ(code_of([] {
                  run_with_validation<int>([](const std::optional<ValidationReport>&) { return 0; },
                                           [](const int&) { return ValidationReport{}; }, -1);
              }),
              Errc::PreconditionFailed);
}

// -- rule tables ----------------------------------------------------------------

TEST(Rules, ClassifyFeedbackTypeTable)
{
    for (int rating = 1; rating <= 10; ++rating) {
        const auto r = record(rating);
        EXPECT_EQ(classify_feedback_type(r, DescriptionSignal::Progress), FeedbackType::Praise);
        EXPECT_EQ(classify_feedback_type(r, DescriptionSignal::Avoidance), FeedbackType::Encourage);
        EXPECT_EQ(classify_feedback_type(r, DescriptionSignal::Neutral),
                  rating >= 7 ? FeedbackType::Praise : FeedbackType::Encourage);
    }
}

TEST(Rules, EndingVariantTable)
{
    const std::array<EndingVariant, 10> expected{
        EndingVariant::Gentle, EndingVariant::Gentle, EndingVariant::Gentle, EndingVariant::Warm,
        EndingVariant::Warm,   EndingVariant::Warm,   EndingVariant::Positive,
        EndingVariant::Positive, EndingVariant::Positive, EndingVariant::Positive};
    for (int s = 1; s <= 10; ++s) {
        EXPECT_EQ(select_ending_variant(s), expected[static_cast<std::size_t>(s - 1)]) << s;
    }
    EXPECT_EQ(code_of([] { select_ending_variant(0); }), Errc::RangeError);
    EXPECT_EQ(code_of([] { select_ending_variant(11); }), Errc::RangeError);
}

TEST(Rules, DescriptionSignal)
{
    const auto lex = DescriptionLexicon::defaults();
    EXPECT_EQ(derive_description_signal("今天尝了一小口", lex), DescriptionSignal::Progress);
    EXPECT_EQ(derive_description_signal("把菜推开了", lex), DescriptionSignal::Avoidance);
    EXPECT_EQ(derive_description_signal("尝了一口又吐出来", lex), DescriptionSignal::Avoidance);
    EXPECT_EQ(derive_description_signal("看了看", lex), DescriptionSignal::Neutral);
    EXPECT_EQ(derive_description_signal("", lex), DescriptionSignal::Neutral);
}

TEST(Rules, ImagePromptAssembly)
{
    VisualCanon canon{"watercolor", "child in raincoat", "", "no text"};
    PagePromptPackage pkg{1, "p01", "holding broccoli"};
    EXPECT_EQ(assemble_image_prompt(canon, pkg), "watercolor, child in raincoat, holding broccoli");
}

// -- stages against a scripted provider -------------------------------------------

TEST(EpisodeStage, RetriesWithRepairReport)
{
    const auto good = testing::draft_json(testing::hand_built_corpus()[0]);
    ScriptedProvider provider([&](const std::string&, const std::string&, TypeTag tag, int call) {
        EXPECT_EQ(tag, TypeTag::EpisodeDraft);
        return call == 0 ? short_draft() : good;
    });
    Pipeline pipeline(provider, testing::prompts());
    GenerationJob job;
    const auto ep = pipeline.generate_episode(framework(), std::nullopt, "西兰花", avatar(),
                                              BasicConstraints{}, {}, &job);
    EXPECT_EQ(provider.calls(), 2);
    EXPECT_EQ(job.attempts, 2);
    EXPECT_EQ(job.status, JobStatus::AwaitingReview);
    EXPECT_EQ(ep.target_food, "西兰花");
    EXPECT_EQ(ep.framework_id, "fw-corpus");
    EXPECT_EQ(ep.kind, EpisodeKind::Main);

    const auto payloads = provider.payloads();
    const auto first = parse_json(payloads[0]);
    const auto second = parse_json(payloads[1]);
    EXPECT_FALSE(first.contains("repair"));
    ASSERT_TRUE(second.contains("repair"));
    EXPECT_EQ(second["repair"]["violations"][0]["code"], "PageTooShort");
    EXPECT_EQ(first["temporal_characteristics"]["target_food"], "西兰花");
}

TEST(EpisodeStage, GivesUpAfterThreeAttempts)
{
    ScriptedProvider provider(
        [](const std::string&, const std::string&, TypeTag, int) { return short_draft(); });
    Pipeline pipeline(provider, testing::prompts());
    EXPECT_EQ(code_of([&] {
                  pipeline.generate_episode(framework(), std::nullopt, "西兰花", avatar(),
                                            BasicConstraints{}, {});
              }),
              Errc::GenerationFailed);
    EXPECT_EQ(provider.calls(), 3);
}

TEST(EpisodeStage, MaxRetriesIsConfigurable)
{
    ScriptedProvider provider(
        [](const std::string&, const std::string&, TypeTag, int) { return short_draft(); });
    PipelineConfig config;
    config.max_retries = 0;
    Pipeline pipeline(provider, testing::prompts(), config);
    EXPECT_THROW(pipeline.generate_episode(framework(), std::nullopt, "西兰花", avatar(),
                                           BasicConstraints{}, {}),
                 GenerationFailedError);
    EXPECT_EQ(provider.calls(), 1);
}

TEST(EpisodeStage, UndecodableOutputIsProviderError)
{
    for (std::string bad : {"not json", R"({"pages":[]})", R"({"episode":1})"}) {
        ScriptedProvider provider(
            [&](const std::string&, const std::string&, TypeTag, int) { return bad; });
        Pipeline pipeline(provider, testing::prompts());
        EXPECT_EQ(code_of([&] {
                      pipeline.generate_episode(framework(), std::nullopt, "西兰花", avatar(),
                                                BasicConstraints{}, {});
                  }),
                  Errc::ProviderError)
            << bad;
        EXPECT_EQ(provider.calls(), 1);
    }
}

TEST(EpisodeStage, FirstPersonNarrationTriggersRetry)
{
    auto bad = testing::hand_built_corpus()[0];
    bad.pages[2].page_text_cn = "我" + bad.pages[2].page_text_cn;
    const auto good = testing::draft_json(testing::hand_built_corpus()[0]);
    ScriptedProvider provider([&](const std::string&, const std::string&, TypeTag, int call) {
        return call == 0 ? testing::draft_json(bad) : good;
    });
    Pipeline pipeline(provider, testing::prompts());
    pipeline.generate_episode(framework(), std::nullopt, "西兰花", avatar(), BasicConstraints{}, {});
    EXPECT_EQ(provider.calls(), 2);
    EXPECT_NE(provider.payloads()[1].find("FirstPersonNarration"), std::string::npos);
}

TEST(EpisodeStage, FoodOverrideMustAppearInTextAndPrompts)
{
    auto no_prompt = testing::hand_built_corpus()[0];
    for (auto& p : no_prompt.page_image_prompt_packages) {
        p.image_prompt_suffix_en = "a sunny kitchen";
    }
    const auto good = testing::draft_json(testing::hand_built_corpus()[0]);
    ScriptedProvider provider([&](const std::string&, const std::string&, TypeTag, int call) {
        return call == 0 ? testing::draft_json(no_prompt) : good;
    });
    Pipeline pipeline(provider, testing::prompts());
    EpisodeOverrides overrides;
    overrides.food_override_must_follow = true;
    pipeline.generate_episode(framework(), std::nullopt, "西兰花", avatar(), BasicConstraints{},
                              overrides);
    EXPECT_EQ(provider.calls(), 2);

    // Without the override the prompt-less draft is accepted.
    ScriptedProvider lenient([&](const std::string&, const std::string&, TypeTag, int) {
        return testing::draft_json(no_prompt);
    });
    Pipeline p2(lenient, testing::prompts());
    p2.generate_episode(framework(), std::nullopt, "西兰花", avatar(), BasicConstraints{}, {});
    EXPECT_EQ(lenient.calls(), 1);
}

TEST(EpisodeStage, EmptyFoodIsRejectedBeforeAnyCall)
{
    ScriptedProvider provider([](const std::string&, const std::string&, TypeTag, int) {
        return std::string("{}");
    });
    Pipeline pipeline(provider, testing::prompts());
    EXPECT_EQ(code_of([&] {
                  pipeline.generate_episode(framework(), std::nullopt, " ", avatar(),
                                            BasicConstraints{}, {});
              }),
              Errc::PreconditionFailed);
    EXPECT_EQ(provider.calls(), 0);
}

TEST(FrameworkStage, ChildRoleMustNameTheAvatar)
{
    auto anonymous = testing::valid_framework("某某");
    ScriptedProvider provider([&](const std::string&, const std::string&, TypeTag tag, int call) {
        EXPECT_EQ(tag, TypeTag::StoryFramework);
        return dump_canonical(encode(call == 0 ? anonymous : testing::valid_framework("乐乐")));
    });
    Pipeline pipeline(provider, testing::prompts());
    const auto fw = pipeline.generate_framework("厨房", StoryMode::RealisticEveryday,
                                                BasicConstraints{}, avatar());
    EXPECT_EQ(provider.calls(), 2);
    EXPECT_NE(fw.child_role.find("乐乐"), std::string::npos);
    EXPECT_NE(provider.payloads()[1].find("ChildRoleMissingAvatar"), std::string::npos);
}

TEST(FrameworkStage, WrongModeIsProviderError)
{
    ScriptedProvider provider([](const std::string&, const std::string&, TypeTag, int) {
        return dump_canonical(encode(testing::valid_framework()));
    });
    Pipeline pipeline(provider, testing::prompts());
    EXPECT_EQ(code_of([&] {
                  pipeline.generate_framework("厨房", StoryMode::LightFantasyFamiliar,
                                              BasicConstraints{}, avatar());
              }),
              Errc::ProviderError);
}

TEST(SummarizeStage, UsesTheLatestWindow)
{
    ScriptedProvider provider([](const std::string&, const std::string&, TypeTag tag, int) {
        EXPECT_EQ(tag, TypeTag::RecapAndGoal);
        return dump_canonical(encode(recap()));
    });
    Pipeline pipeline(provider, testing::prompts());
    auto corpus = testing::hand_built_corpus();
    corpus.resize(5);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        corpus[i].episode_id = "ep-000" + std::to_string(i + 1);
    }
    EXPECT_EQ(pipeline.summarize(corpus, framework()), recap());
    const auto payload = parse_json(provider.payloads()[0]);
    ASSERT_EQ(payload["previous_blocks"].size(), 3u);
    EXPECT_EQ(payload["previous_blocks"][0]["episode_id"], "ep-0003");
    EXPECT_EQ(payload["previous_blocks"][2]["episode_id"], "ep-0005");
    EXPECT_EQ(code_of([&] { pipeline.summarize({}, std::nullopt); }), Errc::PreconditionFailed);
}

TEST(SummarizeStage, StageVocabularyTriggersRetry)
{
    auto staged = recap();
    staged.micro_goal = "提升准备度";
    ScriptedProvider provider([&](const std::string&, const std::string&, TypeTag, int call) {
        return dump_canonical(encode(call == 0 ? staged : recap()));
    });
    Pipeline pipeline(provider, testing::prompts());
    const auto corpus = testing::hand_built_corpus();
    pipeline.summarize(std::span(corpus).first(1), std::nullopt);
    EXPECT_EQ(provider.calls(), 2);
}

TEST(EndingStage, ProducesChainedExtension)
{
    const auto main = testing::hand_built_corpus()[0];
    ScriptedProvider provider([&](const std::string&, const std::string& payload, TypeTag, int) {
        const auto j = parse_json(payload);
        EXPECT_EQ(j["ending_variant"], "gentle");
        EXPECT_EQ(j["id_prefix"], "end_");
        return testing::draft_json(ending_for("西兰花"));
    });
    Pipeline pipeline(provider, testing::prompts());
    const auto result = pipeline.generate_ending(main, record(2), recap(), BasicConstraints{});
    EXPECT_EQ(result.variant, EndingVariant::Gentle);
    EXPECT_EQ(result.episode.kind, EpisodeKind::EndingExtension);
    EXPECT_EQ(result.episode.pages.size(), 4u);
    EXPECT_TRUE(validate_extension_chain(main, result.episode).ok());
}

TEST(EndingStage, FoodMismatchIsRejected)
{
    ScriptedProvider provider([](const std::string&, const std::string&, TypeTag, int) {
        return std::string("{}");
    });
    Pipeline pipeline(provider, testing::prompts());
    EXPECT_EQ(code_of([&] {
                  pipeline.generate_ending(testing::hand_built_corpus()[0], record(5, "胡萝卜"),
                                           recap(), BasicConstraints{});
              }),
              Errc::FoodMismatch);
    EXPECT_EQ(provider.calls(), 0);
}

TEST(EndingStage, KeyCollisionWithMainTriggersRetry)
{
    const auto main = testing::hand_built_corpus()[1];
    auto clash = ending_for("胡萝卜", "豆豆");
    clash.pages[0].interaction->event_key = *main.pages[2].interaction->event_key;
    ScriptedProvider provider([&](const std::string&, const std::string&, TypeTag, int call) {
        return testing::draft_json(call == 0 ? clash : ending_for("胡萝卜", "豆豆"));
    });
    Pipeline pipeline(provider, testing::prompts());
    pipeline.generate_ending(main, record(8, "胡萝卜"), recap(), BasicConstraints{});
    EXPECT_EQ(provider.calls(), 2);
    EXPECT_NE(provider.payloads()[1].find("DuplicateEventKey"), std::string::npos);
}

TEST(EndingStage, ExtensionBudgetForbidsChoices)
{
    auto with_choice = ending_for("西兰花");
    with_choice.pages[1].interaction = Interaction{InteractionType::Choice, "选一选", "end_pick", {}};
    with_choice.pages[1].branch_choices = {{"choice_a", "左", "end_03"}, {"choice_b", "右", "end_04"}};
    ScriptedProvider provider([&](const std::string&, const std::string&, TypeTag, int call) {
        return testing::draft_json(call == 0 ? with_choice : ending_for("西兰花"));
    });
    Pipeline pipeline(provider, testing::prompts());
    pipeline.generate_ending(testing::hand_built_corpus()[0], record(8), recap(),
                             BasicConstraints{});
    EXPECT_EQ(provider.calls(), 2);
    EXPECT_NE(provider.payloads()[1].find("ChoiceBudgetExceeded"), std::string::npos);
}

TEST(FeedbackStage, ClassifiesAndValidates)
{
    const std::vector<std::string> recent{"小小的一步也很珍贵。乐乐闻了西兰花。"};
    ScriptedProvider provider([&](const std::string&, const std::string&, TypeTag tag, int call) {
        EXPECT_EQ(tag, TypeTag::FeedbackText);
        // The first attempt repeats the recent opening.
        return dump_canonical(encode(FeedbackText{
            call == 0 ? "小小的一步也很珍贵。乐乐尝了西兰花。" : "今天的勇气真亮眼。乐乐尝了西兰花。"}));
    });
    Pipeline pipeline(provider, testing::prompts());
    const auto msg = pipeline.generate_feedback(record(4, "西兰花", "今天尝了一小口"), avatar(),
                                                recent, 1);
    EXPECT_EQ(provider.calls(), 2);
    EXPECT_EQ(msg.basic_type, FeedbackType::Praise);
    EXPECT_EQ(msg.record_id, "rec-0001");
    EXPECT_EQ(msg.text_cn, "今天的勇气真亮眼。乐乐尝了西兰花。");
    const auto payload = parse_json(provider.payloads()[0]);
    EXPECT_EQ(payload["recent_phrases"], Json(recent));
    EXPECT_EQ(payload["nickname"], "乐乐");
}

TEST(ImageStage, UsesAvatarReference)
{
    std::optional<std::string> seen;
    ScriptedProvider provider([](const std::string&, const std::string&, TypeTag, int) {
        return std::string("{}");
    });
    Pipeline pipeline(provider, testing::prompts());
    auto a = avatar();
    a.base_reference_image = "abc";
    const auto ep = testing::hand_built_corpus()[0];
    const auto id1 = pipeline.render_page_image(ep.visual_canon, ep.page_image_prompt_packages[0], a);
    const auto id2 = pipeline.render_page_image(ep.visual_canon, ep.page_image_prompt_packages[0], a);
    EXPECT_EQ(id1, id2);
    EXPECT_TRUE(is_asset_id(id1));
}

// -- the mock provider end to end ----------------------------------------------------

TEST(MockPipeline, EveryModeProducesValidOutput)
{
    MemoryAssetStore assets;
    MockProvider mock(assets, 42);
    Pipeline pipeline(mock, testing::prompts());
    const BasicConstraints c;
    for (auto mode : {StoryMode::RealisticEveryday, StoryMode::LightFantasyFamiliar,
                      StoryMode::HybridExpositoryNarrative, StoryMode::JourneyDiscoveryFramework}) {
        GenerationJob job;
        auto fw = pipeline.generate_framework("菜园", mode, c, avatar(), &job);
        EXPECT_EQ(job.attempts, 1) << enum_name(mode);
        fw.framework_id = "fw-0001";
        const auto ep = pipeline.generate_episode(fw, std::nullopt, "胡萝卜", avatar(), c, {});
        EXPECT_TRUE(validate_episode(ep, c).ok()) << describe(validate_episode(ep, c));
        const auto sum = pipeline.summarize(std::span(&ep, 1), fw);
        const auto ending = pipeline.generate_ending(ep, record(6, "胡萝卜"), sum, c);
        EXPECT_TRUE(validate_episode(ending.episode, c).ok());
        EXPECT_TRUE(validate_extension_chain(ep, ending.episode).ok());
    }
}

TEST(MockPipeline, SameInputsSameOutput)
{
    MemoryAssetStore assets;
    MockProvider a(assets, 7);
    MockProvider b(assets, 7);
    MockProvider other(assets, 8);
    Pipeline pa(a, testing::prompts());
    Pipeline pb(b, testing::prompts());
    Pipeline po(other, testing::prompts());
    const BasicConstraints c;
    const auto ea = pa.generate_episode(framework(), recap(), "豆腐", avatar(), c, {});
    const auto eb = pb.generate_episode(framework(), recap(), "豆腐", avatar(), c, {});
    const auto eo = po.generate_episode(framework(), recap(), "豆腐", avatar(), c, {});
    EXPECT_EQ(canonical_serialize(ea), canonical_serialize(eb));
    EXPECT_NE(canonical_serialize(ea), canonical_serialize(eo));
}

} // namespace
} // namespace storyecho
