#include "autograph/llm.hpp"

#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "autograph/errors.hpp"

namespace autograph {

namespace {

bool placeholder_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ' ';
}

// Calls fn(literal_segment) / fn_ph(name) in order of appearance.
template <typename Lit, typename Ph>
void scan_template(std::string_view text, Lit&& on_literal, Ph&& on_placeholder) {
    std::size_t pos = 0;
    std::size_t lit_start = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        std::size_t close = pos + 1;
        while (close < text.size() && placeholder_char(text[close])) ++close;
        if (close < text.size() && text[close] == '}' && close > pos + 1 && text[pos + 1] != ' ') {
            on_literal(text.substr(lit_start, pos - lit_start));
            on_placeholder(std::string(text.substr(pos + 1, close - pos - 1)));
            pos = close + 1;
            lit_start = pos;
        } else {
            ++pos;
        }
    }
    on_literal(text.substr(lit_start));
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string text)
    : name_(std::move(name)), text_(std::move(text)) {
    scan_template(
        text_, [](std::string_view) {},
        [&](std::string ph) {
            if (std::find(placeholders_.begin(), placeholders_.end(), ph) == placeholders_.end())
                placeholders_.push_back(std::move(ph));
        });
}

std::string PromptTemplate::render(const Bindings& bindings) const {
    std::string out;
    out.reserve(text_.size() + 256);
    scan_template(
        text_, [&](std::string_view lit) { out.append(lit); },
        [&](const std::string& ph) {
            auto it = bindings.find(ph);
            if (it == bindings.end())
                throw TemplateError("template '" + name_ + "': unbound placeholder {" + ph + "}");
            out.append(it->second);
        });
    return out;
}

std::string bindings_hash(const Bindings& bindings) {
    json j(bindings);
    return sha256_hex(canonical_dump(j)).substr(0, 16);
}

// ---------------------------------------------------------------------------

ScriptedGateway::ScriptedGateway(std::vector<Rule> rules, std::chrono::milliseconds delay)
    : rules_(std::move(rules)), delay_(delay) {}

ScriptedGateway ScriptedGateway::from_json(const json& script) {
    if (!script.is_object() || !script.contains("responses") || !script["responses"].is_array())
        throw ConfigError("gateway script needs a \"responses\" array");
    std::vector<Rule> rules;
    for (const auto& r : script["responses"]) {
        Rule rule;
        rule.template_name = r.at("template").get<std::string>();
        prompt_template(rule.template_name);  // validates the name
        if (r.contains("bindings")) rule.bindings_hash = bindings_hash(r["bindings"].get<Bindings>());
        if (r.contains("bindings_hash")) rule.bindings_hash = r["bindings_hash"].get<std::string>();
        if (r.contains("when")) rule.contains = r["when"].get<Bindings>();
        rule.is_default = r.value("default", false);
        rule.response.text = r.at("response").get<std::string>();
        rule.response.finish_reason = r.value("finish_reason", "stop");
        rules.push_back(std::move(rule));
    }
    return ScriptedGateway(std::move(rules), std::chrono::milliseconds(script.value("delay_ms", 0)));
}

ScriptedGateway ScriptedGateway::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open gateway script " + path.string());
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("gateway script " + path.string() + " is not JSON");
    return from_json(j);
}

void ScriptedGateway::respond(std::string template_name, Bindings contains, std::string text) {
    Rule r;
    r.template_name = std::move(template_name);
    r.contains = std::move(contains);
    r.response.text = std::move(text);
    rules_.push_back(std::move(r));
}

void ScriptedGateway::respond_default(std::string template_name, std::string text) {
    Rule r;
    r.template_name = std::move(template_name);
    r.is_default = true;
    r.response.text = std::move(text);
    rules_.push_back(std::move(r));
}

ChatResponse ScriptedGateway::complete(std::string_view template_name, const Bindings& bindings,
                                       const Decoding&) const {
    std::string prompt = prompt_template(template_name).render(bindings);
    ++calls_;
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

    auto finish = [&](ChatResponse r) {
        r.usage_tokens = static_cast<long long>((prompt.size() + r.text.size()) / 4);
        return r;
    };

    std::string hash = bindings_hash(bindings);
    for (const auto& r : rules_) {
        if (r.template_name == template_name && r.bindings_hash && *r.bindings_hash == hash)
            return finish(r.response);
    }
    for (const auto& r : rules_) {
        if (r.template_name != template_name || r.bindings_hash || r.is_default ||
            r.contains.empty())
            continue;
        bool all = true;
        for (const auto& [key, needle] : r.contains) {
            auto it = bindings.find(key);
            if (it == bindings.end() ||
                ascii_lower(it->second).find(ascii_lower(needle)) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) return finish(r.response);
    }
    if (responder_) {
        if (auto text = responder_(template_name, bindings)) return finish({*text, "stop", 0});
    }
    for (const auto& r : rules_) {
        if (r.template_name == template_name && r.is_default) return finish(r.response);
    }
    throw ProviderError("scripted gateway: no response for template '" +
                        std::string(template_name) + "' bindings " + hash);
}

// ---------------------------------------------------------------------------

ChatResponse RecordingGateway::complete(std::string_view template_name, const Bindings& bindings,
                                        const Decoding& decoding) const {
    TranscriptEntry e;
    e.template_name = std::string(template_name);
    e.bindings_hash = bindings_hash(bindings);
    e.prompt = prompt_template(template_name).render(bindings);
    try {
        ChatResponse r = inner_.complete(template_name, bindings, decoding);
        e.response = r.text;
        e.finish_reason = r.finish_reason;
        std::lock_guard lock(mutex_);
        entries_.push_back(std::move(e));
        return r;
    } catch (...) {
        e.finish_reason = "error";
        std::lock_guard lock(mutex_);
        entries_.push_back(std::move(e));
        throw;
    }
}

std::vector<TranscriptEntry> RecordingGateway::transcript() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t RecordingGateway::count(std::string_view template_name) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(),
        [&](const TranscriptEntry& e) { return e.template_name == template_name; }));
}

std::string RecordingGateway::transcript_jsonl() const {
    std::string out;
    for (const auto& e : transcript()) {
        out += canonical_dump({{"template", e.template_name},
                               {"bindings_hash", e.bindings_hash},
                               {"prompt", e.prompt},
                               {"response", e.response},
                               {"finish_reason", e.finish_reason}});
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {
std::string cache_key(std::string_view template_name, const Bindings& bindings,
                      const Decoding& d) {
    json j = {{"t", template_name},
              {"b", bindings_hash(bindings)},
              {"temperature", d.temperature},
              {"max_tokens", d.max_tokens},
              {"seed", d.seed ? json(*d.seed) : json(nullptr)}};
    return sha256_hex(canonical_dump(j));
}
}  // namespace

CachingGateway::CachingGateway(std::shared_ptr<const ChatGateway> inner,
                               std::filesystem::path cache_file)
    : inner_(std::move(inner)), file_(std::move(cache_file)) {
    if (file_.empty() || !std::filesystem::exists(file_)) return;
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("k")) continue;
        cache_[j["k"].get<std::string>()] =
            ChatResponse{j.value("text", ""), j.value("finish_reason", "stop"),
                         j.value("usage_tokens", 0LL)};
    }
}

ChatResponse CachingGateway::complete(std::string_view template_name, const Bindings& bindings,
                                      const Decoding& decoding) const {
    auto key = cache_key(template_name, bindings, decoding);
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    ChatResponse r = inner_->complete(template_name, bindings, decoding);
    std::lock_guard lock(mutex_);
    if (cache_.emplace(key, r).second && !file_.empty()) {
        std::ofstream out(file_, std::ios::app);
        out << canonical_dump({{"k", key},
                               {"text", r.text},
                               {"finish_reason", r.finish_reason},
                               {"usage_tokens", r.usage_tokens}})
            << '\n';
    }
    return r;
}

// ---------------------------------------------------------------------------

FinalAnswer extract_final_answer(std::string_view response_text) {
    static constexpr std::string_view kMarker = "Answer:";
    auto pos = response_text.rfind(kMarker);
    if (pos == std::string_view::npos) return {trim(response_text), true};
    return {trim(response_text.substr(pos + kMarker.size())), false};
}

}  // namespace autograph
