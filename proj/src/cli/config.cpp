#include "codedfl/cli/config.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <toml.hpp>

namespace codedfl::cli {

namespace {

using protocol::DataConfig;
using protocol::ExperimentConfig;
using protocol::Method;

// Typed accessors that report "section.key" on mismatch.
class Section {
public:
    Section(const toml::table* table, std::string name, std::string origin)
        : table_(table), name_(std::move(name)), origin_(std::move(origin)) {}

    void check_keys(const std::set<std::string, std::less<>>& allowed) const {
        if (table_ == nullptr) {
            return;
        }
        for (const auto& [key, node] : *table_) {
            if (!allowed.contains(key.str())) {
                throw error(key.str(), "unknown key");
            }
        }
    }

    template <typename T>
    void integer(std::string_view key, T& out, long long min = 0) const {
        if (const auto* node = find(key)) {
            const auto v = node->value<std::int64_t>();
            if (!node->is_integer() || !v) {
                throw error(key, "expected an integer");
            }
            if (*v < min) {
                throw error(key, fmt::format("must be at least {}", min));
            }
            out = static_cast<T>(*v);
        }
    }

    void real(std::string_view key, double& out) const {
        if (const auto* node = find(key)) {
            if (!node->is_number()) {
                throw error(key, "expected a number");
            }
            out = *node->value<double>();
        }
    }

    void real(std::string_view key, std::optional<double>& out) const {
        if (find(key) != nullptr) {
            double v = 0.0;
            real(key, v);
            out = v;
        }
    }

    void boolean(std::string_view key, bool& out) const {
        if (const auto* node = find(key)) {
            if (!node->is_boolean()) {
                throw error(key, "expected true or false");
            }
            out = *node->value<bool>();
        }
    }

    void string(std::string_view key, std::string& out) const {
        if (const auto* node = find(key)) {
            if (!node->is_string()) {
                throw error(key, "expected a string");
            }
            out = *node->value<std::string>();
        }
    }

    const toml::node* find(std::string_view key) const {
        return table_ == nullptr ? nullptr : table_->get(key);
    }

    ConfigError error(std::string_view key, std::string_view what) const {
        return ConfigError(fmt::format("{}: {}.{}: {}", origin_, name_, key, what));
    }

private:
    const toml::table* table_;
    std::string name_;
    std::string origin_;
};

}  // namespace

std::vector<std::string> preset_names() { return {"paper-v", "paper-v-5cls", "paper-v-1cl"}; }

std::filesystem::path bundled_mnist_dir() { return std::filesystem::path(CODEDFL_DATA_DIR) / "mnist-subset"; }

ExperimentConfig preset(std::string_view name) {
    ExperimentConfig c;
    c.clients = 10;
    c.training = {.iterations = 5, .batch = 1024, .eta = 0.01, .rounds = 20};
    c.hidden = 32;
    c.channel = {.snr = 3.0, .rate = 0.6, .sigma2 = 1.0};
    c.bits = 8;
    c.trials = 5;
    c.data.source = DataConfig::Source::idx;
    c.data.directory = bundled_mnist_dir().string();
    c.data.train_limit = 2000;
    c.data.test_limit = 1000;
    if (name == "paper-v") {
        c.data.classes_per_client = 0;
    } else if (name == "paper-v-5cls") {
        c.data.classes_per_client = 5;
    } else if (name == "paper-v-1cl") {
        c.data.classes_per_client = 1;
    } else {
        throw ConfigError(fmt::format("unknown preset '{}' (expected paper-v, paper-v-5cls or paper-v-1cl)", name));
    }
    return c;
}

ExperimentConfig parse_config(std::string_view toml_text, const std::filesystem::path& origin, ExperimentConfig base) {
    const std::string where = origin.string();
    toml::table doc;
    try {
        doc = toml::parse(toml_text, where);
    } catch (const toml::parse_error& e) {
        throw ConfigError(fmt::format("{}:{}:{}: {}", where, e.source().begin.line, e.source().begin.column,
                                      e.description()));
    }
    static const std::set<std::string, std::less<>> sections{"experiment", "channel", "quantizer", "code", "data"};
    for (const auto& [key, node] : doc) {
        if (!sections.contains(key.str())) {
            throw ConfigError(fmt::format("{}: unknown section [{}]", where, key.str()));
        }
        if (!node.is_table()) {
            throw ConfigError(fmt::format("{}: {} must be a table", where, key.str()));
        }
    }
    ExperimentConfig& c = base;

    const Section ex(doc["experiment"].as_table(), "experiment", where);
    ex.check_keys({"clients", "rounds", "local_iterations", "batch_size", "learning_rate", "hidden", "methods", "seed",
                   "trials", "retry_limit", "relaying", "threads", "record_wall_time"});
    ex.integer("clients", c.clients, 1);
    ex.integer("rounds", c.training.rounds, 1);
    ex.integer("local_iterations", c.training.iterations, 1);
    ex.integer("batch_size", c.training.batch, 1);
    ex.real("learning_rate", c.training.eta);
    ex.integer("hidden", c.hidden, 1);
    ex.integer("seed", c.seed, 0);
    ex.integer("trials", c.trials, 1);
    ex.integer("retry_limit", c.retry_limit, 1);
    ex.boolean("relaying", c.relaying);
    ex.integer("threads", c.threads, 0);
    ex.boolean("record_wall_time", c.record_wall_time);
    if (const auto* node = ex.find("methods")) {
        const auto* arr = node->as_array();
        if (arr == nullptr) {
            throw ex.error("methods", "expected an array of method names");
        }
        c.methods.clear();
        for (const auto& item : *arr) {
            const auto name = item.value<std::string>();
            if (!name) {
                throw ex.error("methods", "expected an array of method names");
            }
            try {
                c.methods.push_back(protocol::method_from_string(*name));
            } catch (const std::invalid_argument& e) {
                throw ex.error("methods", e.what());
            }
        }
    }

    const Section ch(doc["channel"].as_table(), "channel", where);
    ch.check_keys({"snr", "snr_db", "rate", "sigma2", "p_e_override"});
    if (ch.find("snr") != nullptr && ch.find("snr_db") != nullptr) {
        throw ch.error("snr_db", "give either snr or snr_db, not both");
    }
    ch.real("snr", c.channel.snr);
    if (ch.find("snr_db") != nullptr) {
        double db = 0.0;
        ch.real("snr_db", db);
        c.channel.snr = channel::db_to_linear(db);
    }
    ch.real("rate", c.channel.rate);
    ch.real("sigma2", c.channel.sigma2);
    ch.real("p_e_override", c.p_e_override);

    const Section qz(doc["quantizer"].as_table(), "quantizer", where);
    qz.check_keys({"bits", "bound", "lower", "upper"});
    qz.integer("bits", c.bits, 1);
    qz.real("bound", c.quantizer_bound);
    if (qz.find("lower") != nullptr || qz.find("upper") != nullptr) {
        double lower = 0.0;
        double upper = 0.0;
        qz.real("lower", lower);
        qz.real("upper", upper);
        if (lower != -upper) {
            throw qz.error("lower", "only symmetric bounds (lower = -upper) are supported; use quantizer.bound");
        }
        c.quantizer_bound = upper;
    }

    const Section cd(doc["code"].as_table(), "code", where);
    cd.check_keys({"field", "width", "polynomial", "modulus"});
    std::string kind = c.field.kind == gf::FieldSpec::Kind::prime ? "prime" : "binary";
    cd.string("field", kind);
    if (kind == "binary") {
        unsigned width = c.field.kind == gf::FieldSpec::Kind::binary_extension ? c.field.width : 8;
        cd.integer("width", width, 1);
        std::uint32_t poly = 0;
        bool poly_given = cd.find("polynomial") != nullptr;
        cd.integer("polynomial", poly, 1);
        try {
            if (!poly_given) {
                poly = (cd.find("width") == nullptr && c.field.kind == gf::FieldSpec::Kind::binary_extension)
                           ? c.field.polynomial
                           : gf::FieldSpec::default_polynomial(width);
            }
        } catch (const std::exception& e) {
            throw cd.error("width", e.what());
        }
        c.field = gf::FieldSpec::binary(width, poly);
    } else if (kind == "prime") {
        std::uint32_t modulus = c.field.modulus;
        cd.integer("modulus", modulus, 2);
        c.field = gf::FieldSpec::prime(modulus);
    } else {
        throw cd.error("field", "expected \"binary\" or \"prime\"");
    }

    const Section dt(doc["data"].as_table(), "data", where);
    dt.check_keys({"source", "directory", "subset_size", "train_limit", "test_limit", "classes_per_client",
                   "synthetic_train", "synthetic_test", "synthetic_features", "synthetic_classes",
                   "synthetic_separation"});
    std::string source = c.data.source == DataConfig::Source::idx ? "idx" : "synthetic";
    dt.string("source", source);
    if (source == "idx" || source == "mnist") {
        c.data.source = DataConfig::Source::idx;
    } else if (source == "synthetic") {
        c.data.source = DataConfig::Source::synthetic;
    } else {
        throw dt.error("source", "expected \"synthetic\" or \"idx\"");
    }
    if (dt.find("directory") != nullptr) {
        std::string dir;
        dt.string("directory", dir);
        std::filesystem::path p(dir);
        if (p.is_relative()) {
            // Absolute, so a manifest re-run works from any directory.
            p = std::filesystem::absolute(origin.parent_path() / p);
        }
        c.data.directory = p.lexically_normal().string();
    }
    dt.integer("subset_size", c.data.train_limit, 0);
    dt.integer("train_limit", c.data.train_limit, 0);
    dt.integer("test_limit", c.data.test_limit, 0);
    if (const auto* node = dt.find("classes_per_client")) {
        if (node->value<std::string>() == "iid") {
            c.data.classes_per_client = 0;
        } else {
            dt.integer("classes_per_client", c.data.classes_per_client, 0);
        }
    }
    dt.integer("synthetic_train", c.data.synthetic_train, 1);
    dt.integer("synthetic_test", c.data.synthetic_test, 1);
    dt.integer("synthetic_features", c.data.synthetic_features, 1);
    dt.integer("synthetic_classes", c.data.synthetic_classes, 2);
    dt.real("synthetic_separation", c.data.synthetic_separation);

    try {
        c.validate();
        gf::GaloisField field(c.field);
        (void)field;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("{}: {}", where, e.what()));
    }
    return c;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot read config file {}", path.string()));
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path, std::move(base));
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : c.methods) {
        methods.push_back(std::string(protocol::to_string(m)));
    }
    nlohmann::json j;
    j["experiment"] = {{"clients", c.clients},
                       {"rounds", c.training.rounds},
                       {"local_iterations", c.training.iterations},
                       {"batch_size", c.training.batch},
                       {"learning_rate", c.training.eta},
                       {"hidden", c.hidden},
                       {"methods", methods},
                       {"seed", c.seed},
                       {"trials", c.trials},
                       {"retry_limit", c.retry_limit},
                       {"relaying", c.relaying},
                       {"record_wall_time", c.record_wall_time}};
    j["channel"] = {{"snr", c.channel.snr}, {"rate", c.channel.rate}, {"sigma2", c.channel.sigma2}};
    j["channel"]["p_e_override"] = c.p_e_override ? nlohmann::json(*c.p_e_override) : nlohmann::json(nullptr);
    j["quantizer"] = {{"bits", c.bits}};
    j["quantizer"]["bound"] = c.quantizer_bound ? nlohmann::json(*c.quantizer_bound) : nlohmann::json(nullptr);
    if (c.field.kind == gf::FieldSpec::Kind::prime) {
        j["code"] = {{"field", "prime"}, {"modulus", c.field.modulus}};
    } else {
        j["code"] = {{"field", "binary"}, {"width", c.field.width}, {"polynomial", c.field.polynomial}};
    }
    const DataConfig& d = c.data;
    j["data"] = {{"source", d.source == DataConfig::Source::idx ? "idx" : "synthetic"},
                 {"directory", d.directory},
                 {"train_limit", d.train_limit},
                 {"test_limit", d.test_limit},
                 {"classes_per_client", d.classes_per_client},
                 {"synthetic_train", d.synthetic_train},
                 {"synthetic_test", d.synthetic_test},
                 {"synthetic_features", d.synthetic_features},
                 {"synthetic_classes", d.synthetic_classes},
                 {"synthetic_separation", d.synthetic_separation}};
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig c;
        const auto& ex = j.at("experiment");
        c.clients = ex.at("clients").get<std::size_t>();
        c.training.rounds = ex.at("rounds").get<std::size_t>();
        c.training.iterations = ex.at("local_iterations").get<std::size_t>();
        c.training.batch = ex.at("batch_size").get<std::size_t>();
        c.training.eta = ex.at("learning_rate").get<double>();
        c.hidden = ex.at("hidden").get<std::size_t>();
        c.methods.clear();
        for (const auto& m : ex.at("methods")) {
            c.methods.push_back(protocol::method_from_string(m.get<std::string>()));
        }
        c.seed = ex.at("seed").get<std::uint64_t>();
        c.trials = ex.at("trials").get<std::size_t>();
        c.retry_limit = ex.at("retry_limit").get<std::size_t>();
        c.relaying = ex.at("relaying").get<bool>();
        c.record_wall_time = ex.at("record_wall_time").get<bool>();
        const auto& ch = j.at("channel");
        c.channel = {ch.at("snr").get<double>(), ch.at("rate").get<double>(), ch.at("sigma2").get<double>()};
        if (!ch.at("p_e_override").is_null()) {
            c.p_e_override = ch.at("p_e_override").get<double>();
        }
        const auto& qz = j.at("quantizer");
        c.bits = qz.at("bits").get<unsigned>();
        if (!qz.at("bound").is_null()) {
            c.quantizer_bound = qz.at("bound").get<double>();
        }
        const auto& cd = j.at("code");
        if (cd.at("field").get<std::string>() == "prime") {
            c.field = gf::FieldSpec::prime(cd.at("modulus").get<std::uint32_t>());
        } else {
            c.field = gf::FieldSpec::binary(cd.at("width").get<unsigned>(), cd.at("polynomial").get<std::uint32_t>());
        }
        const auto& d = j.at("data");
        c.data.source = d.at("source").get<std::string>() == "idx" ? DataConfig::Source::idx : DataConfig::Source::synthetic;
        c.data.directory = d.at("directory").get<std::string>();
        c.data.train_limit = d.at("train_limit").get<std::size_t>();
        c.data.test_limit = d.at("test_limit").get<std::size_t>();
        c.data.classes_per_client = d.at("classes_per_client").get<std::size_t>();
        c.data.synthetic_train = d.at("synthetic_train").get<std::size_t>();
        c.data.synthetic_test = d.at("synthetic_test").get<std::size_t>();
        c.data.synthetic_features = d.at("synthetic_features").get<std::size_t>();
        c.data.synthetic_classes = d.at("synthetic_classes").get<int>();
        c.data.synthetic_separation = d.at("synthetic_separation").get<double>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("manifest config: {}", e.what()));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("manifest config: {}", e.what()));
    }
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = to_json(config).dump();
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex += fmt::format("{:02x}", digest[i]);
    }
    return hex;
}

}  // namespace codedfl::cli
