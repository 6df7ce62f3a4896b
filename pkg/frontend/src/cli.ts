#!/usr/bin/env node
import { main } from "./figgen.js";

process.exit(main(process.argv.slice(2)));
