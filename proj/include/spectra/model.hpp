#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace spectra {

enum class ModelKind {
    LooseStraight, // I
    LooseZigzag,   // II
    TightStraight, // III
    TightZigzag,   // IV
    LooseCarpet,   // V
    TightCarpet,   // VI
};

// Which closed form the chain/carpet conditions use.
//   determinant: consistent with det(Q - L(theta)) of the unit cell
//   literal:     the reduced polynomials exactly as originally stated
// The two agree for loose chains.
enum class Form { determinant, literal };

struct ModelParams {
    ModelKind kind = ModelKind::LooseStraight;
    double a = 1.0;
    double d = 1.0;
    double alpha = 1.0;
    Form form = Form::determinant;
};

inline bool is_loose(ModelKind m)
{
    return m == ModelKind::LooseStraight || m == ModelKind::LooseZigzag || m == ModelKind::LooseCarpet;
}
inline bool is_tight(ModelKind m) { return !is_loose(m); }
inline bool is_carpet(ModelKind m) { return m == ModelKind::LooseCarpet || m == ModelKind::TightCarpet; }
inline bool is_chain(ModelKind m) { return !is_carpet(m); }
inline bool is_zigzag(ModelKind m) { return m == ModelKind::LooseZigzag || m == ModelKind::TightZigzag; }

// Q entries a model reads besides the diagonal: chains use one, carpets both
inline bool uses_quarter_entry(ModelKind m) { return is_zigzag(m) || is_carpet(m); }
inline bool uses_antipodal_entry(ModelKind m) { return !is_zigzag(m); }

struct ModelName {
    ModelKind kind;
    std::string_view key;
    std::string_view roman;
};

inline constexpr std::array<ModelName, 6> model_names = {{
    {ModelKind::LooseStraight, "loose-straight", "I"},
    {ModelKind::LooseZigzag, "loose-zigzag", "II"},
    {ModelKind::TightStraight, "tight-straight", "III"},
    {ModelKind::TightZigzag, "tight-zigzag", "IV"},
    {ModelKind::LooseCarpet, "loose-carpet", "V"},
    {ModelKind::TightCarpet, "tight-carpet", "VI"},
}};

inline std::string to_string(ModelKind m)
{
    for (const auto& n : model_names)
        if (n.kind == m)
            return std::string(n.key);
    return "?";
}

/// Accepts "loose-straight", "I", ... (case-sensitive).
inline std::optional<ModelKind> parse_model(std::string_view s)
{
    for (const auto& n : model_names)
        if (s == n.key || s == n.roman)
            return n.kind;
    return std::nullopt;
}

inline std::string to_string(Form f) { return f == Form::literal ? "literal" : "determinant"; }

inline std::optional<Form> parse_form(std::string_view s)
{
    if (s == "literal")
        return Form::literal;
    if (s == "determinant")
        return Form::determinant;
    return std::nullopt;
}

} // namespace spectra
