#include "logcog/cognition.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace logcog {

namespace {

constexpr const char* kModule = "cognition";

enum Placeholder : unsigned {
    kQueryLog = 1u << 0,
    kRetrievedLog = 1u << 1,
    kRetrievalScore = 1u << 2,
    kPriorExplanation = 1u << 3,
    kPriorVerdict = 1u << 4,
    kPriorReply = 1u << 5,
};

struct PlaceholderName {
    Placeholder bit;
    std::string_view token;
};

constexpr std::array<PlaceholderName, 6> kPlaceholders{{
    {kQueryLog, "{query_log}"},
    {kRetrievedLog, "{retrieved_log}"},
    {kRetrievalScore, "{retrieval_score}"},
    {kPriorExplanation, "{prior_explanation}"},
    {kPriorVerdict, "{prior_verdict}"},
    {kPriorReply, "{prior_reply}"},
}};

struct TemplateRule {
    std::string_view id;
    TaskKind kind;
    unsigned required;
    unsigned allowed;
};

constexpr unsigned kBase = kQueryLog | kRetrievedLog;
constexpr unsigned kFirstStage = kBase | kRetrievalScore;

constexpr std::array<TemplateRule, 7> kRules{{
    {"explain", TaskKind::Explain, kBase, kFirstStage},
    {"decide", TaskKind::Decide, kBase, kFirstStage},
    {"explain_decide", TaskKind::ExplainDecide, kBase, kFirstStage},
    {"decide_explain", TaskKind::DecideExplain, kBase, kFirstStage},
    {"decide_after_explain", TaskKind::Decide, kBase | kPriorExplanation, kFirstStage | kPriorExplanation},
    {"explain_after_decide", TaskKind::Explain, kBase | kPriorVerdict | kPriorReply,
     kFirstStage | kPriorVerdict | kPriorReply},
    {"reflect", TaskKind::Reflect, kBase | kPriorExplanation | kPriorVerdict,
     kFirstStage | kPriorExplanation | kPriorVerdict | kPriorReply},
}};

const TemplateRule* find_rule(std::string_view id) {
    for (const auto& r : kRules) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

unsigned placeholders_in(std::string_view text) {
    unsigned used = 0;
    for (const auto& p : kPlaceholders) {
        if (text.find(p.token) != std::string_view::npos) used |= p.bit;
    }
    return used;
}

constexpr std::string_view kAnalystRole =
    "You are a cyber security analyst reviewing supercomputer system logs. For each task you are given a "
    "log entry under analysis and the closest matching entry retrieved from a database that holds only "
    "normal log entries.";
constexpr std::string_view kVerdictContract =
    " End your reply with a final line that reads exactly VERDICT: NORMAL or VERDICT: ANOMALY.";
constexpr std::string_view kExplainOnly =
    " Give your reasoning only and do not classify the entry.";

constexpr std::string_view kEntryBlock =
    "Log entry under analysis: {query_log}\n"
    "Closest known-normal entry: {retrieved_log}\n"
    "Similarity between the two entries: {retrieval_score}\n";

std::string default_user(std::string_view id) {
    std::string body(kEntryBlock);
    body += '\n';
    if (id == "explain") {
        body += "Explain how the log entry under analysis compares with the known-normal entry and what it "
                "says about the state of the system.";
    } else if (id == "decide") {
        body += "Decide whether the log entry under analysis is normal or an anomaly.";
    } else if (id == "explain_decide") {
        body += "First explain how the log entry under analysis compares with the known-normal entry, then "
                "decide whether it is normal or an anomaly.";
    } else if (id == "decide_explain") {
        body += "First decide whether the log entry under analysis is normal or an anomaly, then explain the "
                "reasoning behind your decision.";
    } else if (id == "decide_after_explain") {
        body += "Earlier explanation:\n{prior_explanation}\n\n"
                "Using this explanation, decide whether the log entry under analysis is normal or an anomaly.";
    } else if (id == "explain_after_decide") {
        body += "Earlier decision: {prior_verdict}\n"
                "Earlier decision reply:\n{prior_reply}\n\n"
                "Explain the reasoning that supports or contradicts this decision.";
    } else {
        body += "Earlier explanation:\n{prior_explanation}\n"
                "Earlier verdict: {prior_verdict}\n\n"
                "Reflect on the explanation and verdict above. Check that the reasoning is consistent with both "
                "log entries and that the verdict follows from it, and correct the verdict if it is wrong.";
    }
    return body;
}

std::string default_system(const TemplateRule& rule) {
    std::string s(kAnalystRole);
    s += is_deciding(rule.kind) ? kVerdictContract : kExplainOnly;
    return s;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, kModule, "cannot read template " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", score);
    return buf;
}

std::string envelope_line(double score) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "CTX score=%.17g", score);
    return buf;
}

std::string render(std::string_view text, const PromptContext& ctx) {
    std::string out;
    out.reserve(text.size() + ctx.query_log.size() + ctx.retrieved_log.size());
    std::size_t i = 0;
    while (i < text.size()) {
        bool replaced = false;
        if (text[i] == '{') {
            for (const auto& p : kPlaceholders) {
                if (text.compare(i, p.token.size(), p.token) != 0) continue;
                switch (p.bit) {
                case kQueryLog: out += ctx.query_log; break;
                case kRetrievedLog: out += ctx.retrieved_log; break;
                case kRetrievalScore: out += format_score(*ctx.retrieval_score); break;
                case kPriorExplanation: out += *ctx.prior_explanation; break;
                case kPriorVerdict: out += verdict_name(*ctx.prior_verdict); break;
                case kPriorReply: out += *ctx.prior_reply; break;
                }
                i += p.token.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

void require(bool present, const char* field, std::string_view template_id) {
    if (!present) {
        throw Error(Errc::MissingContext, kModule,
                    std::string("template '") + std::string(template_id) + "' needs " + field);
    }
}

const std::regex& verdict_regex() {
    static const std::regex re(R"(verdict\s*:\s*\**\s*(normal|anomaly)\b)", std::regex::icase);
    return re;
}

std::string trim_copy(std::string_view s) {
    auto space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && space(s.front())) s.remove_prefix(1);
    while (!s.empty() && space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

} // namespace

std::string_view task_kind_name(TaskKind kind) noexcept {
    switch (kind) {
    case TaskKind::Explain: return "Explain";
    case TaskKind::Decide: return "Decide";
    case TaskKind::ExplainDecide: return "ExplainDecide";
    case TaskKind::DecideExplain: return "DecideExplain";
    case TaskKind::Reflect: return "Reflect";
    }
    return "Explain";
}

std::string_view verdict_name(Verdict verdict) noexcept {
    switch (verdict) {
    case Verdict::Normal: return "NORMAL";
    case Verdict::Anomaly: return "ANOMALY";
    case Verdict::Unparseable: return "UNPARSEABLE";
    }
    return "UNPARSEABLE";
}

bool is_deciding(TaskKind kind) noexcept { return kind != TaskKind::Explain; }

bool is_explaining(TaskKind kind) noexcept {
    return kind == TaskKind::Explain || kind == TaskKind::ExplainDecide || kind == TaskKind::DecideExplain;
}

const std::array<std::string_view, 4>& canonical_strategy_ids() noexcept {
    static constexpr std::array<std::string_view, 4> ids{"{E,D}+R", "{D,E}+R", "E+D+R", "D+E+R"};
    return ids;
}

Strategy strategy_from_id(std::string_view id) {
    std::string key;
    for (char c : id) {
        if (!std::isspace(static_cast<unsigned char>(c))) key.push_back(static_cast<char>(std::toupper(c)));
    }
    const CognitiveTask reflect{TaskKind::Reflect, "reflect"};
    if (key == "{E,D}+R" || key == "[E,D]+R" || key == "ED+R") {
        return Strategy{"{E,D}+R", {{TaskKind::ExplainDecide, "explain_decide"}, reflect}};
    }
    if (key == "{D,E}+R" || key == "[D,E]+R" || key == "DE+R") {
        return Strategy{"{D,E}+R", {{TaskKind::DecideExplain, "decide_explain"}, reflect}};
    }
    if (key == "E+D+R" || key == "[E+D+R]" || key == "EDR") {
        return Strategy{"E+D+R", {{TaskKind::Explain, "explain"}, {TaskKind::Decide, "decide_after_explain"}, reflect}};
    }
    if (key == "D+E+R" || key == "[D+E+R]" || key == "DER") {
        return Strategy{"D+E+R", {{TaskKind::Decide, "decide"}, {TaskKind::Explain, "explain_after_decide"}, reflect}};
    }
    throw Error(Errc::UnknownStrategy, kModule, "unknown strategy '" + std::string(id) + "'");
}

const std::array<std::string_view, 7>& TemplateSet::template_ids() noexcept {
    static constexpr std::array<std::string_view, 7> ids{
        "explain", "decide", "explain_decide", "decide_explain", "decide_after_explain", "explain_after_decide",
        "reflect"};
    return ids;
}

TemplateSet TemplateSet::defaults() {
    TemplateSet set;
    for (const auto& rule : kRules) {
        set.set(std::string(rule.id), PromptTemplate{default_system(rule), default_user(rule.id)});
    }
    return set;
}

TemplateSet TemplateSet::load_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error(Errc::FileNotFound, kModule, "template directory not found: " + dir.string());
    }
    TemplateSet set = defaults();
    for (const auto& rule : kRules) {
        const std::string id(rule.id);
        PromptTemplate tmpl = set.get(id);
        bool changed = false;
        if (const auto user = dir / (id + ".txt"); std::filesystem::is_regular_file(user, ec)) {
            tmpl.user = read_file(user);
            changed = true;
        }
        if (const auto system = dir / (id + ".system.txt"); std::filesystem::is_regular_file(system, ec)) {
            tmpl.system = read_file(system);
            changed = true;
        }
        if (changed) set.set(id, std::move(tmpl));
    }
    return set;
}

void TemplateSet::set(const std::string& id, PromptTemplate tmpl) {
    const TemplateRule* rule = find_rule(id);
    if (!rule) {
        throw Error(Errc::UnknownTemplate, kModule, "unknown template id '" + id + "'");
    }
    const unsigned used = placeholders_in(tmpl.user) | placeholders_in(tmpl.system);
    for (const auto& p : kPlaceholders) {
        if ((rule->required & p.bit) && !(used & p.bit)) {
            throw Error(Errc::UnknownTemplate, kModule,
                        "template '" + id + "' must use " + std::string(p.token));
        }
        if ((used & p.bit) && !(rule->allowed & p.bit)) {
            throw Error(Errc::UnknownTemplate, kModule,
                        "template '" + id + "' may not use " + std::string(p.token));
        }
    }
    if (tmpl.user.empty() || tmpl.system.empty()) {
        throw Error(Errc::UnknownTemplate, kModule, "template '" + id + "' has an empty message");
    }
    templates_.insert_or_assign(id, std::move(tmpl));
}

const PromptTemplate& TemplateSet::get(const std::string& id) const {
    const auto it = templates_.find(id);
    if (it == templates_.end()) {
        throw Error(Errc::UnknownTemplate, kModule, "no template '" + id + "'");
    }
    return it->second;
}

std::vector<ChatMessage> build_prompt(const CognitiveTask& task, const PromptContext& ctx,
                                      const TemplateSet& templates, const PromptOptions& options) {
    const TemplateRule* rule = find_rule(task.template_id);
    if (!rule) {
        throw Error(Errc::UnknownTemplate, kModule, "unknown template id '" + task.template_id + "'");
    }
    if (rule->kind != task.kind) {
        throw Error(Errc::UnknownTemplate, kModule,
                    "template '" + task.template_id + "' does not serve " + std::string(task_kind_name(task.kind)));
    }
    const PromptTemplate& tmpl = templates.get(task.template_id);

    require(!ctx.query_log.empty(), "query_log", task.template_id);
    require(!ctx.retrieved_log.empty(), "retrieved_log", task.template_id);
    require(ctx.retrieval_score.has_value(), "retrieval_score", task.template_id);
    const unsigned needed = rule->required | placeholders_in(tmpl.user) | placeholders_in(tmpl.system);
    if (needed & kPriorExplanation) require(ctx.prior_explanation.has_value(), "prior_explanation", task.template_id);
    if (needed & kPriorVerdict) require(ctx.prior_verdict.has_value(), "prior_verdict", task.template_id);
    if (needed & kPriorReply) require(ctx.prior_reply.has_value(), "prior_reply", task.template_id);

    std::string user = render(tmpl.user, ctx);
    if (options.include_envelope) {
        if (!user.empty() && user.back() != '\n') user += '\n';
        user += '\n';
        user += envelope_line(*ctx.retrieval_score);
    }
    return {ChatMessage{Role::System, render(tmpl.system, ctx)}, ChatMessage{Role::User, std::move(user)}};
}

Verdict parse_verdict(std::string_view reply) {
    const std::string text(reply);
    std::optional<Verdict> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), verdict_regex()); it != std::sregex_iterator();
         ++it) {
        std::string word = (*it)[1].str();
        last = (std::tolower(static_cast<unsigned char>(word[0])) == 'a') ? Verdict::Anomaly : Verdict::Normal;
    }
    if (last) return *last;

    static const std::set<std::string> anomaly_words{"anomaly", "anomalous", "abnormal"};
    static const std::set<std::string> normal_words{"normal", "benign", "expected"};
    bool saw_anomaly = false;
    bool saw_normal = false;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        saw_anomaly = saw_anomaly || anomaly_words.contains(word);
        saw_normal = saw_normal || normal_words.contains(word);
        word.clear();
    };
    for (char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    if (saw_anomaly != saw_normal) {
        return saw_anomaly ? Verdict::Anomaly : Verdict::Normal;
    }
    return Verdict::Unparseable;
}

std::string strip_verdict(std::string_view reply) {
    return trim_copy(std::regex_replace(std::string(reply), verdict_regex(), ""));
}

AnalysisResult run_strategy(const Strategy& strategy, const LogRecord& record, const RetrievalHit& hit,
                            ChatBackend& backend, const PipelineOptions& options) {
    if (strategy.chain.empty() || strategy.chain.back().kind != TaskKind::Reflect) {
        throw Error(Errc::UnknownStrategy, kModule, "strategy '" + strategy.id + "' must end with Reflect");
    }
    static const auto fallback_templates = std::make_shared<const TemplateSet>(TemplateSet::defaults());
    const TemplateSet& templates = options.templates ? *options.templates : *fallback_templates;

    PromptContext ctx;
    ctx.query_log = record.content;
    ctx.retrieved_log = hit.entry.text;
    ctx.retrieval_score = hit.score;

    AnalysisResult result;
    result.record_id = record.id;
    result.retrieval = hit;
    std::optional<Verdict> latest_decision;

    for (const auto& task : strategy.chain) {
        ChatRequest request;
        request.messages = build_prompt(task, ctx, templates, options.prompt);
        request.model_id = options.model_id;
        request.temperature = options.temperature;
        request.max_tokens = options.max_tokens;
        request.correlation_id = std::to_string(record.id);

        ChatResponse response;
        try {
            response = backend.complete(request);
        } catch (const Error& e) {
            throw StrategyError(e.code(),
                                "stage " + std::string(task_kind_name(task.kind)) + " of " + strategy.id +
                                    " failed for record " + std::to_string(record.id) + ": " + e.what(),
                                result.stages);
        }

        StageOutput stage;
        stage.task_kind = task.kind;
        stage.raw_reply = response.text;
        if (is_deciding(task.kind)) {
            stage.parsed_verdict = parse_verdict(response.text);
            stage.explanation = strip_verdict(response.text);
        } else {
            stage.explanation = trim_copy(response.text);
        }

        if (is_explaining(task.kind)) {
            ctx.prior_explanation = stage.explanation;
            result.explanation = stage.explanation;
        }
        if (task.kind != TaskKind::Reflect && stage.parsed_verdict) {
            ctx.prior_verdict = *stage.parsed_verdict;
            if (*stage.parsed_verdict != Verdict::Unparseable) latest_decision = *stage.parsed_verdict;
        }
        ctx.prior_reply = response.text;
        result.stages.push_back(std::move(stage));
    }

    const Verdict reflected = *result.stages.back().parsed_verdict;
    if (reflected != Verdict::Unparseable || options.policy == FinalVerdictPolicy::ReflectOnly) {
        result.final_verdict = reflected;
    } else {
        result.final_verdict = latest_decision.value_or(Verdict::Unparseable);
    }
    return result;
}

} // namespace logcog
