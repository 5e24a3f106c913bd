#include <mscodec/cli.hpp>

int main(int argc, char** argv) { return mscodec::run_cli(argc, argv); }
