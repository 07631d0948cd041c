#include "trackwatch/error.hpp"
#include "trackwatch/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace trackwatch {

using nlohmann::json;

namespace {

// nlohmann's default object type is an ordered std::map, so keys come out
// sorted; numbers get a fixed 17-digit format.
void dump_canonical(const json& j, std::string& out) {
    switch (j.type()) {
    case json::value_t::object: {
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ',';
            first = false;
            out += json(it.key()).dump();
            out += ':';
            dump_canonical(*it, out);
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ',';
            dump_canonical(j[i], out);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float: {
        const double v = j.get<double>();
        if (!std::isfinite(v)) throw ValidationError("model contains a non-finite number");
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
        break;
    }
    default:
        out += j.dump();
    }
}

json scale_json(const ScaleConfig& s) {
    return {{"delta_d", s.delta_d}, {"delta_q", s.delta_q}, {"delta_theta", s.delta_theta}};
}

ScaleConfig scale_from(const json& j) {
    return {j.at("delta_d").get<double>(), j.at("delta_q").get<double>(), j.at("delta_theta").get<double>()};
}

json vocab_json(const PrimitiveVocabulary& v) {
    json prims = json::array();
    for (const auto& p : v.primitives) {
        prims.push_back({{"X", p.X}, {"Y", p.Y}, {"Theta", p.Theta}, {"member_count", p.member_count}});
    }
    return prims;
}

PrimitiveVocabulary vocab_from(const json& scale, const json& prims) {
    PrimitiveVocabulary v;
    v.scale = scale_from(scale);
    for (const auto& p : prims) {
        v.primitives.push_back({p.at("X").get<double>(), p.at("Y").get<double>(), p.at("Theta").get<double>(),
                                p.at("member_count").get<std::size_t>()});
    }
    return v;
}

json meta_json(const TrainingMeta& m) {
    json scales = json::array();
    for (const auto& s : m.scales) {
        scales.push_back({{"delta_d", s.delta_d},
                          {"tracklets", s.tracklets},
                          {"primitives", s.primitives},
                          {"sequences", s.sequences}});
    }
    const auto& c = m.config;
    return {{"input_tracks", m.input_tracks},
            {"filtered_tracks", m.filtered_tracks},
            {"scored_rho1", m.scored_rho1},
            {"scored_rho2", m.scored_rho2},
            {"unscorable", m.unscorable},
            {"scales", scales},
            {"config",
             {{"scales", c.scales},
              {"delta_q", c.delta_q},
              {"delta_theta", c.delta_theta},
              {"alpha", c.alpha},
              {"min_length", c.filter.min_length},
              {"min_variance", c.filter.min_variance},
              {"quantile", c.threshold.quantile},
              {"pursuit_alpha", c.pursuit.alpha},
              {"sigma_floor", c.pursuit.sigma_floor},
              {"unseen_margin", c.pursuit.unseen_margin}}}};
}

TrainingMeta meta_from(const json& j) {
    TrainingMeta m;
    m.input_tracks = j.at("input_tracks").get<std::size_t>();
    m.filtered_tracks = j.at("filtered_tracks").get<std::size_t>();
    m.scored_rho1 = j.at("scored_rho1").get<std::size_t>();
    m.scored_rho2 = j.at("scored_rho2").get<std::size_t>();
    m.unscorable = j.at("unscorable").get<std::size_t>();
    for (const auto& s : j.at("scales")) {
        m.scales.push_back({s.at("delta_d").get<double>(), s.at("tracklets").get<std::size_t>(),
                            s.at("primitives").get<std::size_t>(), s.at("sequences").get<std::size_t>()});
    }
    const auto& c = j.at("config");
    m.config.scales = c.at("scales").get<std::vector<double>>();
    m.config.delta_q = c.at("delta_q").get<double>();
    m.config.delta_theta = c.at("delta_theta").get<double>();
    m.config.alpha = c.at("alpha").get<double>();
    m.config.filter.min_length = c.at("min_length").get<std::size_t>();
    m.config.filter.min_variance = c.at("min_variance").get<double>();
    m.config.threshold.quantile = c.at("quantile").get<double>();
    m.config.pursuit.alpha = c.at("pursuit_alpha").get<double>();
    m.config.pursuit.sigma_floor = c.at("sigma_floor").get<double>();
    m.config.pursuit.unseen_margin = c.at("unseen_margin").get<double>();
    return m;
}

json model_json(const SceneModel& model) {
    json scales = json::array();
    for (std::size_t k = 0; k < model.ensemble.chains.size(); ++k) {
        const auto& ch = model.ensemble.chains[k];
        scales.push_back({{"scale", scale_json(ch.vocab.scale)},
                          {"primitives", vocab_json(ch.vocab)},
                          {"log_prior", ch.log_prior},
                          {"log_transition", ch.log_transition},
                          {"cdf", model.ensemble.cdfs[k].sorted_samples()},
                          {"alpha", ch.smoothing_alpha}});
    }
    json pairs = json::array();
    for (const auto& [key, s] : model.pursuit.stats) {
        pairs.push_back({{"from", s.from_idx},
                         {"to", s.to_idx},
                         {"pair_log_prob", s.pair_log_prob},
                         {"mean_length", s.mean_length},
                         {"sigma", s.sigma},
                         {"count", s.observation_count}});
    }
    return {{"format_version", model_format_version},
            {"meta", meta_json(model.meta)},
            {"ensemble", {{"threshold_r1", model.ensemble.threshold_r1}, {"scales", scales}}},
            {"pursuit",
             {{"alpha", model.pursuit.alpha},
              {"sigma_floor", model.pursuit.sigma_floor},
              {"unseen_pair_log_prob", model.pursuit.unseen_pair_log_prob},
              {"threshold_r2", model.pursuit.threshold_r2},
              {"pairs", pairs}}}};
}

SceneModel model_from(const json& j) {
    SceneModel m;
    m.meta = meta_from(j.at("meta"));
    std::vector<ChainModel> chains;
    std::vector<EmpiricalCdf> cdfs;
    for (const auto& s : j.at("ensemble").at("scales")) {
        ChainModel ch;
        ch.vocab = vocab_from(s.at("scale"), s.at("primitives"));
        ch.log_prior = s.at("log_prior").get<std::vector<double>>();
        ch.log_transition = s.at("log_transition").get<std::vector<double>>();
        ch.smoothing_alpha = s.at("alpha").get<double>();
        const auto v = ch.vocab.size();
        if (ch.log_prior.size() != v || ch.log_transition.size() != v * v) {
            throw LoadError("chain arrays do not match the vocabulary size", 0);
        }
        chains.push_back(std::move(ch));
        cdfs.emplace_back(s.at("cdf").get<std::vector<double>>());
    }
    m.ensemble = make_ensemble(std::move(chains), std::move(cdfs), j.at("ensemble").at("threshold_r1").get<double>());

    const auto& p = j.at("pursuit");
    m.pursuit.vocab = m.finest_vocab();
    m.pursuit.alpha = p.at("alpha").get<double>();
    m.pursuit.sigma_floor = p.at("sigma_floor").get<double>();
    m.pursuit.unseen_pair_log_prob = p.at("unseen_pair_log_prob").get<double>();
    m.pursuit.threshold_r2 = p.at("threshold_r2").get<double>();
    const auto v = m.pursuit.vocab.size();
    for (const auto& e : p.at("pairs")) {
        PairStats s;
        s.from_idx = e.at("from").get<std::size_t>();
        s.to_idx = e.at("to").get<std::size_t>();
        s.pair_log_prob = e.at("pair_log_prob").get<double>();
        s.mean_length = e.at("mean_length").get<double>();
        s.sigma = e.at("sigma").get<double>();
        s.observation_count = e.at("count").get<std::size_t>();
        if (s.from_idx >= v || s.to_idx >= v) throw LoadError("pair table references an unknown primitive", 0);
        m.pursuit.stats.emplace(PairKey{s.from_idx, s.to_idx}, s);
    }
    return m;
}

} // namespace

std::string save_model(const SceneModel& model) {
    std::string out;
    dump_canonical(model_json(model), out);
    out += '\n';
    return out;
}

void save_model_file(const std::string& path, const SceneModel& model) {
    const auto bytes = save_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on '" + path + "'");
}

SceneModel load_model(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw LoadError(std::string("model file is malformed or truncated: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
        throw LoadError("model file has no format_version", 0);
    }
    const int version = doc["format_version"].get<int>();
    if (version != model_format_version) {
        throw LoadError("unsupported model format version " + std::to_string(version) + " (expected "
                            + std::to_string(model_format_version) + ")",
                        0);
    }
    try {
        return model_from(doc);
    } catch (const json::exception& e) {
        throw LoadError(std::string("model file is missing or has mistyped fields: ") + e.what(), 0);
    } catch (const LoadError&) {
        throw;
    } catch (const ValidationError& e) {
        throw LoadError(std::string("model file is inconsistent: ") + e.what(), 0);
    }
}

SceneModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    return load_model({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

} // namespace trackwatch
