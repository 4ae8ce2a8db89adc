#include "advkt/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace advkt {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad number '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ValidationError("config key '" + key + "': bad integer '" + v + "'");
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ValidationError("config key '" + key + "': bad seed '" + v + "'");
    }
    return out;
}

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "gamma") cfg.gamma = to_double(key, value);
    else if (key == "lambda1") cfg.lambda1 = to_double(key, value);
    else if (key == "lambda2") cfg.lambda2 = to_double(key, value);
    else if (key == "alpha") cfg.alpha = to_double(key, value);
    else if (key == "lr_g") cfg.lr_g = to_double(key, value);
    else if (key == "lr_d") cfg.lr_d = to_double(key, value);
    else if (key == "d_update_period") cfg.d_update_period = to_int(key, value);
    else if (key == "batch_size") cfg.batch_size = to_int(key, value);
    else if (key == "max_epochs") cfg.max_epochs = to_int(key, value);
    else if (key == "patience") cfg.patience = to_int(key, value);
    else if (key == "seed") cfg.seed = to_u64(key, value);
    else if (key == "adv_sign") {
        if (value == "reinforce") cfg.adv_sign = AdvSign::reinforce;
        else if (value == "as_written") cfg.adv_sign = AdvSign::as_written;
        else throw ValidationError("adv_sign must be 'reinforce' or 'as_written'");
    } else if (key == "disc_sign") {
        if (value == "separating") cfg.disc_sign = DiscSign::separating;
        else if (value == "as_written") cfg.disc_sign = DiscSign::as_written;
        else throw ValidationError("disc_sign must be 'separating' or 'as_written'");
    }
    else if (key == "embed_dim") cfg.embed_dim = to_int(key, value);
    else if (key == "hidden_dim") cfg.hidden_dim = to_int(key, value);
    else if (key == "heads") cfg.heads = to_int(key, value);
    else if (key == "max_len") cfg.max_len = to_int(key, value);
    else if (key == "mask_rate") cfg.mask_rate = to_double(key, value);
    else if (key == "crop_fraction") cfg.crop_fraction = to_double(key, value);
    else if (key == "permute_fraction") cfg.permute_fraction = to_double(key, value);
    else if (key == "replace_rate") cfg.replace_rate = to_double(key, value);
    else if (key == "flip_prob") cfg.flip_prob = to_double(key, value);
    else if (key == "e_synth_fraction") cfg.e_synth_fraction = to_double(key, value);
    else if (key == "smoothing") cfg.smoothing = to_double(key, value);
    else if (key == "threads") cfg.threads = to_int(key, value);
    else throw ValidationError("unknown config key '" + key + "'");
}

TrainConfig parse_config_text(const std::string& text, TrainConfig base) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        apply_config_entry(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

TrainConfig load_config_file(const std::string& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), base);
}

std::string render_config(const TrainConfig& cfg) {
    std::ostringstream os;
    os << "gamma = " << g17(cfg.gamma) << '\n'
       << "lambda1 = " << g17(cfg.lambda1) << '\n'
       << "lambda2 = " << g17(cfg.lambda2) << '\n'
       << "alpha = " << g17(cfg.alpha) << '\n'
       << "lr_g = " << g17(cfg.lr_g) << '\n'
       << "lr_d = " << g17(cfg.lr_d) << '\n'
       << "d_update_period = " << cfg.d_update_period << '\n'
       << "batch_size = " << cfg.batch_size << '\n'
       << "max_epochs = " << cfg.max_epochs << '\n'
       << "patience = " << cfg.patience << '\n'
       << "seed = " << cfg.seed << '\n'
       << "adv_sign = " << (cfg.adv_sign == AdvSign::reinforce ? "reinforce" : "as_written") << '\n'
       << "disc_sign = " << (cfg.disc_sign == DiscSign::separating ? "separating" : "as_written") << '\n'
       << "embed_dim = " << cfg.embed_dim << '\n'
       << "hidden_dim = " << cfg.hidden_dim << '\n'
       << "heads = " << cfg.heads << '\n'
       << "max_len = " << cfg.max_len << '\n'
       << "mask_rate = " << g17(cfg.mask_rate) << '\n'
       << "crop_fraction = " << g17(cfg.crop_fraction) << '\n'
       << "permute_fraction = " << g17(cfg.permute_fraction) << '\n'
       << "replace_rate = " << g17(cfg.replace_rate) << '\n'
       << "flip_prob = " << g17(cfg.flip_prob) << '\n'
       << "e_synth_fraction = " << g17(cfg.e_synth_fraction) << '\n'
       << "smoothing = " << g17(cfg.smoothing) << '\n'
       << "threads = " << cfg.threads << '\n';
    return os.str();
}

}  // namespace advkt
