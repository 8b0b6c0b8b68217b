#include "apf/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "apf/serialize.hpp"

namespace apf {

namespace {

[[noreturn]] void syntax(std::size_t line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing `#` comment that is not inside a string.
std::string strip_comment(const std::string& line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == '\\' && quote == '"') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

bool bare_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

std::string parse_key(std::string_view text, std::size_t line) {
    std::string key = trim(text);
    if (key.empty()) syntax(line, "empty key");
    std::string out;
    std::size_t i = 0;
    while (i < key.size()) {
        if (key[i] == '"') {
            const auto end = key.find('"', i + 1);
            if (end == std::string::npos) syntax(line, "unterminated quoted key");
            out += key.substr(i + 1, end - i - 1);
            i = end + 1;
        } else if (key[i] == '.') {
            out += '.';
            ++i;
        } else if (key[i] == ' ' || key[i] == '\t') {
            ++i;
        } else if (bare_key_char(key[i])) {
            out += key[i++];
        } else {
            syntax(line, "invalid character in key '" + key + "'");
        }
    }
    return out;
}

class ValueParser {
public:
    ValueParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    TomlDocument::Value parse() {
        skip_ws();
        TomlDocument::Value v;
        v.line = line_;
        if (peek() == '[') {
            ++pos_;
            std::vector<TomlDocument::Scalar> items;
            skip_ws();
            while (peek() != ']') {
                items.push_back(scalar());
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    skip_ws();
                } else if (peek() != ']') {
                    syntax(line_, "expected ',' or ']' in array");
                }
            }
            ++pos_;
            v.data = std::move(items);
        } else {
            v.data = scalar();
        }
        skip_ws();
        if (pos_ != s_.size()) syntax(line_, "unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
        return v;
    }

private:
    char peek() const {
        if (pos_ >= s_.size()) syntax(line_, "unexpected end of value");
        return s_[pos_];
    }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    TomlDocument::Scalar scalar() {
        const char c = peek();
        if (c == '"') return basic_string();
        if (c == '\'') {
            const auto end = s_.find('\'', pos_ + 1);
            if (end == std::string_view::npos) syntax(line_, "unterminated string");
            std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
            pos_ = end + 1;
            return out;
        }
        std::size_t end = pos_;
        while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && !std::isspace(static_cast<unsigned char>(s_[end])))
            ++end;
        std::string token(s_.substr(pos_, end - pos_));
        pos_ = end;
        if (token == "true") return true;
        if (token == "false") return false;
        std::string digits;
        for (char ch : token)
            if (ch != '_') digits += ch;
        if (digits.empty()) syntax(line_, "missing value");
        const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits.find("inf") != std::string::npos ||
                              digits.find("nan") != std::string::npos;
        const char* b = digits.data() + (digits[0] == '+' ? 1 : 0);
        const char* e = digits.data() + digits.size();
        if (is_float) {
            double d = 0;
            auto r = std::from_chars(b, e, d);
            if (r.ec != std::errc{} || r.ptr != e) syntax(line_, "invalid number '" + token + "'");
            return d;
        }
        std::int64_t i = 0;
        auto r = std::from_chars(b, e, i);
        if (r.ec != std::errc{} || r.ptr != e) syntax(line_, "invalid value '" + token + "'");
        return i;
    }

    std::string basic_string() {
        std::string out;
        ++pos_;
        while (true) {
            if (pos_ >= s_.size()) syntax(line_, "unterminated string");
            const char c = s_[pos_++];
            if (c == '"') break;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (pos_ >= s_.size()) syntax(line_, "unterminated escape");
            switch (const char esc = s_[pos_++]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: syntax(line_, std::string("unsupported escape \\") + esc);
            }
        }
        return out;
    }

    std::string_view s_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

int bracket_balance(const std::string& text) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quote) {
            if (c == '\\' && quote == '"') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

}  // namespace

TomlDocument TomlDocument::parse(const std::string& text) {
    TomlDocument doc;
    std::string prefix;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto next_line = [&](std::string& out) {
        if (pos >= text.size()) return false;
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        out = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        return true;
    };
    std::string raw;
    while (next_line(raw)) {
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        const std::size_t start_line = line_no;
        if (line.rfind("[[", 0) == 0) {
            if (line.size() < 4 || line.substr(line.size() - 2) != "]]") syntax(start_line, "malformed table-array header");
            const std::string name = parse_key(line.substr(2, line.size() - 4), start_line);
            const std::size_t idx = doc.arrays_[name]++;
            prefix = name + "." + std::to_string(idx) + ".";
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') syntax(start_line, "malformed table header");
            prefix = parse_key(line.substr(1, line.size() - 2), start_line) + ".";
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) syntax(start_line, "expected 'key = value'");
        const std::string key = prefix + parse_key(line.substr(0, eq), start_line);
        std::string value = trim(line.substr(eq + 1));
        while (bracket_balance(value) > 0) {
            if (!next_line(raw)) syntax(start_line, "unterminated array");
            value += " " + trim(strip_comment(raw));
        }
        if (doc.entries_.count(key)) syntax(start_line, "duplicate key '" + key + "'");
        doc.entries_[key] = ValueParser(value, start_line).parse();
    }
    return doc;
}

std::size_t TomlDocument::array_size(const std::string& name) const {
    auto it = arrays_.find(name);
    return it == arrays_.end() ? 0 : it->second;
}

std::string_view to_string(Lkv2Mode mode) {
    switch (mode) {
        case Lkv2Mode::Auto: return "auto";
        case Lkv2Mode::Always: return "always";
        case Lkv2Mode::Never: return "never";
    }
    return "auto";
}

TrainConfig PipelineConfig::train_for(int horizon_minutes) const {
    auto it = train_by_horizon.find(horizon_minutes);
    return it == train_by_horizon.end() ? train : it->second;
}

int PipelineConfig::horizon_steps(int horizon_minutes) const {
    const long long seconds = static_cast<long long>(horizon_minutes) * 60;
    if (horizon_minutes <= 0 || step_w <= 0 || seconds % step_w != 0)
        throw ConfigError("horizon " + std::to_string(horizon_minutes) + " min is not a positive multiple of step_w " +
                          std::to_string(step_w) + " s");
    return static_cast<int>(seconds / step_w);
}

ModelSpec PipelineConfig::spec_for(Tier tier, int horizon_minutes) const {
    ModelSpec s = ModelSpec::for_tier(tier, lookback, horizon_steps(horizon_minutes), input_channels);
    const auto& [layers, hidden] = architecture.at(tier);
    s.lstm_layers = layers;
    s.hidden_size = hidden;
    return s;
}

void PipelineConfig::validate() const {
    std::vector<std::string> problems;
    auto collect = [&](const std::function<void()>& check) {
        try {
            check();
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    };
    if (jobs < 1) problems.push_back("jobs must be >= 1");
    if (out_dir.empty()) problems.push_back("out_dir must not be empty");
    if (step_w <= 0) problems.push_back("input.step_w must be > 0");
    if (input_path.empty()) collect([&] { apf::validate(synthetic); });
    collect([&] { calendar.validate(); });
    if (!(variance_target > 0.0 && variance_target <= 1.0)) problems.push_back("reduce.variance_target must lie in (0, 1]");
    if (k_min < 2) problems.push_back("cluster.k_min must be >= 2");
    if (k_max < k_min) problems.push_back("cluster.k_max must be >= cluster.k_min");
    if (kmeans_restarts < 1) problems.push_back("cluster.restarts must be >= 1");
    if (kmeans_max_iter < 1) problems.push_back("cluster.max_iter must be >= 1");
    if (lookback < 1) problems.push_back("model.lookback must be >= 1");
    if (input_channels != 1 && input_channels != 2) problems.push_back("model.input_channels must be 1 or 2");
    for (const auto& [tier, arch] : architecture)
        if (arch.first < 1 || arch.second < 1)
            problems.push_back("model." + std::string(to_string(tier)) + " layers and hidden size must be >= 1");
    if (horizons_min.empty()) problems.push_back("model.horizons must list at least one horizon");
    std::set<int> seen;
    for (int h : horizons_min) {
        if (!seen.insert(h).second) problems.push_back("model.horizons lists " + std::to_string(h) + " twice");
        if (step_w > 0) collect([&] { horizon_steps(h); });
    }
    collect([&] { windows.validate(); });
    collect([&] { train.validate(); });
    for (const auto& [h, t] : train_by_horizon) {
        if (!seen.count(h)) problems.push_back("train.h" + std::to_string(h) + " overrides an unconfigured horizon");
        collect([&] { t.validate(); });
    }
    collect([&] { policy.validate(); });
    if (problems.empty()) return;
    std::string msg = "invalid configuration (" + std::to_string(problems.size()) + " problem" +
                      (problems.size() == 1 ? "" : "s") + "):";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
}

namespace {

class Reader {
public:
    explicit Reader(const TomlDocument& doc) : doc_(doc) {}

    template <typename T>
    void get(const std::string& key, T& target) {
        auto it = doc_.entries().find(key);
        if (it == doc_.entries().end()) return;
        used_.insert(key);
        const auto* scalar = std::get_if<TomlDocument::Scalar>(&it->second.data);
        if (!scalar) return fail(key, it->second.line, "expected a single value");
        convert(key, it->second.line, *scalar, target);
    }

    void get_int_list(const std::string& key, std::vector<int>& target) {
        auto it = doc_.entries().find(key);
        if (it == doc_.entries().end()) return;
        used_.insert(key);
        const auto* arr = std::get_if<std::vector<TomlDocument::Scalar>>(&it->second.data);
        if (!arr) return fail(key, it->second.line, "expected an array of integers");
        std::vector<int> out;
        for (const auto& s : *arr) {
            int v = 0;
            if (!convert(key, it->second.line, s, v)) return;
            out.push_back(v);
        }
        target = out;
    }

    bool has_prefix(const std::string& prefix) const {
        for (const auto& [k, v] : doc_.entries())
            if (k.rfind(prefix, 0) == 0) return true;
        return false;
    }

    void add_problem(std::string msg) { problems_.push_back(std::move(msg)); }

    std::vector<std::string> finish() {
        for (const auto& [k, v] : doc_.entries())
            if (!used_.count(k)) problems_.push_back("line " + std::to_string(v.line) + ": unknown key '" + k + "'");
        return problems_;
    }

private:
    void fail(const std::string& key, std::size_t line, const std::string& what) {
        problems_.push_back("line " + std::to_string(line) + ": '" + key + "' " + what);
    }

    bool convert(const std::string& key, std::size_t line, const TomlDocument::Scalar& s, std::string& out) {
        if (auto* v = std::get_if<std::string>(&s)) return out = *v, true;
        fail(key, line, "expected a string");
        return false;
    }
    bool convert(const std::string& key, std::size_t line, const TomlDocument::Scalar& s, bool& out) {
        if (auto* v = std::get_if<bool>(&s)) return out = *v, true;
        fail(key, line, "expected true or false");
        return false;
    }
    bool convert(const std::string& key, std::size_t line, const TomlDocument::Scalar& s, double& out) {
        if (auto* v = std::get_if<double>(&s)) return out = *v, true;
        if (auto* v = std::get_if<std::int64_t>(&s)) return out = static_cast<double>(*v), true;
        fail(key, line, "expected a number");
        return false;
    }
    template <typename I>
        requires std::is_integral_v<I>
    bool convert(const std::string& key, std::size_t line, const TomlDocument::Scalar& s, I& out) {
        if (auto* v = std::get_if<std::int64_t>(&s)) {
            if (std::is_unsigned_v<I> && *v < 0) {
                fail(key, line, "must be non-negative");
                return false;
            }
            if (sizeof(I) < sizeof(std::int64_t) && (*v < static_cast<std::int64_t>(std::numeric_limits<I>::min()) ||
                                                     *v > static_cast<std::int64_t>(std::numeric_limits<I>::max()))) {
                fail(key, line, "is out of range");
                return false;
            }
            out = static_cast<I>(*v);
            return true;
        }
        fail(key, line, "expected an integer");
        return false;
    }

    const TomlDocument& doc_;
    std::set<std::string> used_;
    std::vector<std::string> problems_;
};

void read_train(Reader& r, const std::string& prefix, TrainConfig& t) {
    r.get(prefix + "learning_rate", t.learning_rate);
    r.get(prefix + "batch_size", t.batch_size);
    r.get(prefix + "max_epochs", t.max_epochs);
    r.get(prefix + "patience", t.patience);
    r.get(prefix + "beta1", t.beta1);
    r.get(prefix + "beta2", t.beta2);
    r.get(prefix + "epsilon", t.epsilon);
}

}  // namespace

PipelineConfig load_config(const TomlDocument& doc) {
    PipelineConfig c;
    Reader r(doc);
    r.get("seed", c.seed);
    r.get("out_dir", c.out_dir);
    r.get("jobs", c.jobs);

    r.get("input.path", c.input_path);
    r.get("input.step_w", c.step_w);
    r.get("input.columns.ap_id", c.columns.ap_id);
    r.get("input.columns.client_id", c.columns.client_id);
    r.get("input.columns.start_time", c.columns.start_time);
    r.get("input.columns.end_time", c.columns.end_time);
    r.get("input.columns.bytes_up", c.columns.bytes_up);
    r.get("input.columns.bytes_down", c.columns.bytes_down);

    r.get("synthetic.days", c.synthetic.days);
    r.get("synthetic.origin", c.synthetic.origin);
    if (const std::size_t n = doc.array_size("synthetic.archetype"); n > 0) {
        c.synthetic.archetypes.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const std::string p = "synthetic.archetype." + std::to_string(i) + ".";
            Archetype a;
            r.get(p + "name", a.name);
            r.get(p + "count", a.count);
            r.get(p + "base_level", a.base_level);
            r.get(p + "diurnal_amplitude", a.diurnal_amplitude);
            r.get(p + "weekend_contrast", a.weekend_contrast);
            r.get(p + "noise_scale", a.noise_scale);
            r.get(p + "noise_ar", a.noise_ar);
            r.get(p + "peak_hour", a.peak_hour);
            r.get(p + "bytes_per_user", a.bytes_per_user);
            if (a.name.empty()) a.name = "archetype" + std::to_string(i);
            c.synthetic.archetypes.push_back(a);
        }
    }

    std::string transform = std::string(to_string(c.transform));
    r.get("features.transform", transform);
    try {
        c.transform = parse_transform(transform);
    } catch (const Error& e) {
        r.add_problem(e.what());
    }
    r.get("features.morning_start", c.calendar.morning_start);
    r.get("features.afternoon_start", c.calendar.afternoon_start);
    r.get("features.night_start", c.calendar.night_start);
    r.get("features.tz_offset_hours", c.calendar.tz_offset_hours);

    r.get("reduce.variance_target", c.variance_target);

    r.get("cluster.k_min", c.k_min);
    r.get("cluster.k_max", c.k_max);
    r.get("cluster.restarts", c.kmeans_restarts);
    r.get("cluster.max_iter", c.kmeans_max_iter);

    r.get("model.lookback", c.lookback);
    r.get("model.input_channels", c.input_channels);
    r.get_int_list("model.horizons", c.horizons_min);
    for (Tier tier : {Tier::GM, Tier::Lk, Tier::Lkv2}) {
        const std::string name(to_string(tier));
        std::string lower;
        for (char ch : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        r.get("model." + lower + "_layers", c.architecture[tier].first);
        r.get("model." + lower + "_hidden", c.architecture[tier].second);
    }
    std::string mode = std::string(to_string(c.lkv2_mode));
    r.get("model.lkv2_mode", mode);
    if (mode == "auto") c.lkv2_mode = Lkv2Mode::Auto;
    else if (mode == "always") c.lkv2_mode = Lkv2Mode::Always;
    else if (mode == "never") c.lkv2_mode = Lkv2Mode::Never;
    else r.add_problem("model.lkv2_mode must be auto, always or never (got '" + mode + "')");

    r.get("windows.stride", c.windows.stride);
    r.get("windows.train_fraction", c.windows.train_fraction);
    r.get("windows.val_fraction", c.windows.val_fraction);

    read_train(r, "train.", c.train);
    for (int h : c.horizons_min) {
        const std::string p = "train.h" + std::to_string(h) + ".";
        if (!r.has_prefix(p)) continue;
        TrainConfig t = c.train;
        read_train(r, p, t);
        c.train_by_horizon[h] = t;
    }

    r.get("deploy.absolute_floor", c.policy.absolute_floor);
    r.get("deploy.relative_threshold", c.policy.relative_threshold);
    r.get("deploy.escalation_threshold", c.policy.escalation_threshold);
    r.get("deploy.lkv2_trainable", c.policy.lkv2_trainable);
    double budget_mb = -1.0;
    r.get("deploy.memory_budget_mb", budget_mb);
    if (budget_mb >= 0.0) c.policy.memory_budget = budget_mb * kBytesPerMB;
    double gm_mb = c.policy.sizes.gm / kBytesPerMB, lk_mb = c.policy.sizes.lk / kBytesPerMB,
           lkv2_mb = c.policy.sizes.lkv2 / kBytesPerMB;
    r.get("deploy.gm_mb", gm_mb);
    r.get("deploy.lk_mb", lk_mb);
    r.get("deploy.lkv2_mb", lkv2_mb);
    c.policy.sizes = {gm_mb * kBytesPerMB, lk_mb * kBytesPerMB, lkv2_mb * kBytesPerMB};

    std::vector<std::string> problems = r.finish();
    try {
        c.validate();
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        std::size_t p = what.find("\n  - ");
        while (p != std::string::npos) {
            const std::size_t next = what.find("\n  - ", p + 5);
            problems.push_back(what.substr(p + 5, next == std::string::npos ? std::string::npos : next - p - 5));
            p = next;
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid configuration (" + std::to_string(problems.size()) + " problem" +
                          (problems.size() == 1 ? "" : "s") + "):";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    return c;
}

PipelineConfig load_config_file(const std::string& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const DependencyError&) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    return load_config(TomlDocument::parse(text));
}

}  // namespace apf
