from cli import augment, dataset, demo, preprocess, report, search, train

# registration order is the order shown in --help
COMMAND_MODULES = (dataset, preprocess, augment, train, search, report, demo)
