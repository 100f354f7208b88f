#include <fstream>

#include "m3net/errors.hpp"
#include "m3net/model/bundle.hpp"

namespace m3net {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
    return {{"variant", to_string(c.variant)},
            {"dim", c.dim},
            {"image_feature_width", c.image_feature_width},
            {"bag_capacity", c.bag_capacity},
            {"biomarker_width", c.biomarker_width},
            {"attention_hidden", c.attention_hidden},
            {"bio_hidden", c.bio_hidden},
            {"combined_hidden", c.combined_hidden},
            {"blood_index", c.blood_index},
            {"mayo_index", c.mayo_index}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.dim = j.at("dim").get<int>();
    c.image_feature_width = j.at("image_feature_width").get<int>();
    c.bag_capacity = j.at("bag_capacity").get<int>();
    c.biomarker_width = j.at("biomarker_width").get<int>();
    c.attention_hidden = j.at("attention_hidden").get<int>();
    c.bio_hidden = j.at("bio_hidden").get<int>();
    c.combined_hidden = j.at("combined_hidden").get<int>();
    c.blood_index = j.at("blood_index").get<int>();
    c.mayo_index = j.at("mayo_index").get<int>();
    c.validate();
    return c;
}

json model_to_json(const ModelBundle& m) {
    json params = json::object();
    for (const auto& [name, p] : m.params.named_parameters()) {
        json values = json::array();
        for (Eigen::Index k = 0; k < p->size(); ++k) values.push_back(p->value.data()[k]);
        params[name] = {{"shape", {p->rows(), p->cols()}}, {"values", std::move(values)}};
    }
    return {{"format", "m3net-model"},
            {"version", kModelFormatVersion},
            {"config", config_to_json(m.params.config)},
            {"parameters", std::move(params)},
            {"normalization", data::stats_to_json(m.normalization)},
            {"seed", m.seed},
            {"metadata", m.metadata}};
}

ModelBundle model_from_json(const json& j) {
    try {
        if (j.value("format", std::string{}) != "m3net-model")
            throw DataError("model file: unrecognised format tag");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw DataError("model file: unsupported version " + std::to_string(j.at("version").get<int>()));
        ModelBundle m{M3NetParams<double>(config_from_json(j.at("config"))), {}, 0, json::object()};
        const json& params = j.at("parameters");
        for (const auto& [name, p] : m.params.named_parameters()) {
            if (!params.contains(name)) throw DataError("model file: missing parameter '" + name + "'");
            const json& entry = params.at(name);
            const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
            if (shape.size() != 2 || shape[0] != p->rows() || shape[1] != p->cols())
                throw DataError("model file: parameter '" + name + "' has the wrong shape");
            const json& values = entry.at("values");
            if (static_cast<Eigen::Index>(values.size()) != p->size())
                throw DataError("model file: parameter '" + name + "' has the wrong number of values");
            for (Eigen::Index k = 0; k < p->size(); ++k) p->value.data()[k] = values[static_cast<std::size_t>(k)].get<double>();
            p->zero_grad();
        }
        m.normalization = data::stats_from_json(j.at("normalization"));
        if (m.normalization.bio_mean.size() != m.params.config.biomarker_width ||
            m.normalization.image_mean.size() != m.params.config.image_feature_width)
            throw DataError("model file: normalization widths do not match the model config");
        m.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("metadata")) m.metadata = j.at("metadata");
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ModelBundle& m) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    out << model_to_json(m).dump(1) << '\n';
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("model file '" + path.string() + "': " + e.what());
    }
    return model_from_json(j);
}

} // namespace m3net
