#include <iostream>

#include <CLI11.hpp>

#include "gazezone/synth/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic in-cabin gaze-zone dataset"};
    gazezone::synth::SynthOptions o;
    std::string root;
    app.add_option("root", root, "Output directory")->required();
    app.add_option("--subjects", o.subjects, "Number of subjects");
    app.add_option("--frames-per-zone", o.frames_per_zone, "Frames per zone per subject");
    app.add_option("--width", o.width, "Frame width");
    app.add_option("--height", o.height, "Frame height");
    app.add_option("--seed", o.seed, "Generator seed");
    CLI11_PARSE(app, argc, argv);
    try {
        const auto ds = gazezone::synth::generate(o, root);
        std::cout << "frames " << ds.frames.size() << "\nboxes " << ds.boxes_csv.string() << "\nprofile "
                  << ds.profile_json.string() << '\n';
        for (const auto& m : ds.manifests) std::cout << "manifest " << m.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
