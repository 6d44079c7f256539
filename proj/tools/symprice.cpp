#include "symprice/app.hpp"

int main(int argc, char** argv) { return symprice::app::main(argc, argv); }
